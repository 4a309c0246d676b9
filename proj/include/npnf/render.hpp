#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "npnf/field.hpp"
#include "npnf/geom.hpp"
#include "npnf/rng.hpp"

namespace npnf {

struct RenderConfig {
  double h_near = 0.1;
  double h_far = 10.0;
  int n_samples = 128;
  bool stratified_noise = false;
  uint64_t seed = 0;
};

struct RayRender {
  Vec3 color{};
  double depth = 0.0;
  double trans_residual = 1.0;  // T(h_far)
};

// Stratified depths: h_k = near + (k + u_k)/n * (far - near); u_k = 0.5
// when noise is off. Strictly increasing.
std::vector<double> sample_along_ray(const RenderConfig& cfg, Rng& rng);

// Alpha-compositing quadrature shared by the plain paths. The field is any
// callable (x, d) -> FieldSample.
template <class FieldFn>
RayRender composite_ray(FieldFn&& field, const Ray& ray,
                        std::span<const double> hs, double h_far) {
  RayRender out;
  double T = 1.0;
  size_t n = hs.size();
  for (size_t k = 0; k < n; ++k) {
    double h = hs[k];
    double delta = (k + 1 < n ? hs[k + 1] : h_far) - h;
    Vec3 x = ray.origin + ray.dir * h;
    FieldSample s = field(x, ray.dir);
    double a = 1.0 - std::exp(-s.sigma * delta);
    double w = T * a;
    out.color = out.color + s.color * w;
    out.depth += w * h;
    T *= 1.0 - a;
  }
  out.trans_residual = T;
  return out;
}

RayRender render_ray(const FieldParams& theta, const Ray& ray,
                     const RenderConfig& cfg, Rng& rng);

// Renders one pixel with an arbitrary field callable. RayRender.depth is
// distance along the ray; image-level depth maps convert to z-depth via
// the pixel direction cosine.
template <class FieldFn>
void render_pixel_fn(FieldFn&& field, const PoseParam& pose,
                     const Intrinsics& K, const RenderConfig& cfg, int u,
                     int v, size_t stream, Image& img, DepthMap& depth) {
  Rng rng(cfg.seed * 0x100000001b3ULL + stream);
  std::vector<double> hs = sample_along_ray(cfg, rng);
  Ray ray = camera_ray(pose, K, u, v);
  RayRender r = composite_ray(field, ray, hs, cfg.h_far);
  double* px = img.pixel(u, v);
  px[0] = r.color.x;
  px[1] = r.color.y;
  px[2] = r.color.z;
  depth.at(u, v) = r.depth * pixel_dir_cam(K, u, v).z;
}

template <class FieldFn>
void render_image_fn(FieldFn&& field, const PoseParam& pose,
                     const Intrinsics& K, const RenderConfig& cfg,
                     std::span<const std::pair<int, int>> pixels, Image& img,
                     DepthMap& depth) {
  for (size_t i = 0; i < pixels.size(); ++i) {
    auto [u, v] = pixels[i];
    render_pixel_fn(field, pose, K, cfg, u, v, i, img, depth);
  }
}

// Renders the given pixels into img/depth (which must be pre-sized).
// Deterministic for a fixed seed regardless of thread count: each pixel
// draws noise from its own seeded stream.
void render_image(const FieldParams& theta, const PoseParam& pose,
                  const Intrinsics& K, const RenderConfig& cfg,
                  std::span<const std::pair<int, int>> pixels, Image& img,
                  DepthMap& depth);

// Single-threaded reference used by tests and the benchmark.
void render_image_serial(const FieldParams& theta, const PoseParam& pose,
                         const Intrinsics& K, const RenderConfig& cfg,
                         std::span<const std::pair<int, int>> pixels,
                         Image& img, DepthMap& depth);

struct RayRenderVar {
  Vec3T<Var> color;
  Var depth;
  Var trans_residual;
};

// Tape-side quadrature, differentiable w.r.t. the field parameters and the
// ray (hence pose). Sample depths are fixed constants of the evaluation.
RayRenderVar render_ray_var(Tape& tape, const FieldConfig& config,
                            uint32_t theta_base, const RayVars& ray,
                            std::span<const double> hs, double h_far);

std::vector<std::pair<int, int>> all_pixels(int width, int height);

}  // namespace npnf
