#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/rng.hpp"
#include "npnf/tape.hpp"

namespace npnf {

// Architecture of the radiance field MLP. Density comes off the trunk
// before the view direction enters, so sigma never depends on d.
struct FieldConfig {
  int hidden_layers = 4;
  int hidden_width = 64;
  int freqs_x = 6;  // position encoding frequencies
  int freqs_d = 2;  // direction encoding frequencies

  int enc_x_dim() const { return 3 + 6 * freqs_x; }
  int enc_d_dim() const { return 3 + 6 * freqs_d; }
  size_t param_count() const;
};

struct FieldParams {
  FieldConfig config;
  std::vector<double> values;  // flat, layer by layer: [W row-major | b]
};

struct FieldSample {
  Vec3 color;    // each channel in (0,1)
  double sigma;  // >= 0
};

struct FieldSampleVar {
  Vec3T<Var> color;
  Var sigma;
};

// gamma(v) = (v, sin 2^0 pi v, cos 2^0 pi v, ..., sin 2^{L-1} pi v, ...)
std::vector<double> positional_encode(const Vec3& v, int freqs);

// Uniform +-sqrt(6/(fan_in+fan_out)) per layer, seeded.
FieldParams init_field(const FieldConfig& config, uint64_t seed);

// Plain (non-differentiating) evaluation; the fast path for rendering.
FieldSample eval_field(const FieldParams& theta, const Vec3& x, const Vec3& d);

// Tape evaluation against a parameter block previously loaded with
// leaf_block (same flat layout as FieldParams::values).
FieldSampleVar eval_field_var(Tape& tape, const FieldConfig& config,
                              uint32_t theta_base, const Vec3T<Var>& x,
                              const Vec3T<Var>& d);

}  // namespace npnf
