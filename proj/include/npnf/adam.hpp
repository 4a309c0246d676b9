#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace npnf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  uint64_t step = 0;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam with bias correction.
inline void adam_step(std::span<double> params, std::span<const double> grads,
                      AdamState& state, double lr,
                      const AdamConfig& cfg = AdamConfig{}) {
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace npnf
