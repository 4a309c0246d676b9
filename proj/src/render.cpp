#include "npnf/render.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdlib>

namespace npnf {

std::vector<double> sample_along_ray(const RenderConfig& cfg, Rng& rng) {
  std::vector<double> hs(cfg.n_samples);
  double bin = (cfg.h_far - cfg.h_near) / cfg.n_samples;
  for (int k = 0; k < cfg.n_samples; ++k) {
    double u = cfg.stratified_noise ? rng.uniform() : 0.5;
    hs[k] = cfg.h_near + (k + u) * bin;
  }
  return hs;
}

RayRender render_ray(const FieldParams& theta, const Ray& ray,
                     const RenderConfig& cfg, Rng& rng) {
  std::vector<double> hs = sample_along_ray(cfg, rng);
  return composite_ray(
      [&](const Vec3& x, const Vec3& d) { return eval_field(theta, x, d); },
      ray, hs, cfg.h_far);
}

namespace {

void render_pixel(const FieldParams& theta, const PoseParam& pose,
                  const Intrinsics& K, const RenderConfig& cfg, int u, int v,
                  size_t stream, Image& img, DepthMap& depth) {
  render_pixel_fn(
      [&](const Vec3& x, const Vec3& d) { return eval_field(theta, x, d); },
      pose, K, cfg, u, v, stream, img, depth);
}

int max_threads() {
#ifdef _OPENMP
  if (const char* env = std::getenv("NPNF_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

void render_image(const FieldParams& theta, const PoseParam& pose,
                  const Intrinsics& K, const RenderConfig& cfg,
                  std::span<const std::pair<int, int>> pixels, Image& img,
                  DepthMap& depth) {
  int64_t n = int64_t(pixels.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
  for (int64_t i = 0; i < n; ++i) {
    auto [u, v] = pixels[i];
    render_pixel(theta, pose, K, cfg, u, v, size_t(i), img, depth);
  }
}

void render_image_serial(const FieldParams& theta, const PoseParam& pose,
                         const Intrinsics& K, const RenderConfig& cfg,
                         std::span<const std::pair<int, int>> pixels,
                         Image& img, DepthMap& depth) {
  for (size_t i = 0; i < pixels.size(); ++i) {
    auto [u, v] = pixels[i];
    render_pixel(theta, pose, K, cfg, u, v, i, img, depth);
  }
}

RayRenderVar render_ray_var(Tape& tape, const FieldConfig& config,
                            uint32_t theta_base, const RayVars& ray,
                            std::span<const double> hs, double h_far) {
  Var one = tape.constant(1.0);
  Var zero = tape.constant(0.0);
  RayRenderVar out{{zero, zero, zero}, zero, one};
  Var T = one;
  size_t n = hs.size();
  for (size_t k = 0; k < n; ++k) {
    double h = hs[k];
    double delta = (k + 1 < n ? hs[k + 1] : h_far) - h;
    Vec3T<Var> x = ray.origin + ray.dir * h;
    FieldSampleVar s = eval_field_var(tape, config, theta_base, x, ray.dir);
    Var a = 1.0 - exp(s.sigma * (-delta));
    Var w = T * a;
    out.color.x = out.color.x + w * s.color.x;
    out.color.y = out.color.y + w * s.color.y;
    out.color.z = out.color.z + w * s.color.z;
    out.depth = out.depth + w * h;
    T = T * (1.0 - a);
  }
  out.trans_residual = T;
  return out;
}

std::vector<std::pair<int, int>> all_pixels(int width, int height) {
  std::vector<std::pair<int, int>> px;
  px.reserve(size_t(width) * height);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) px.emplace_back(u, v);
  return px;
}

}  // namespace npnf
