#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npnf/render.hpp"
#include "npnf/synth.hpp"

using namespace npnf;

TEST_CASE("quadrature depths are stratified and increasing") {
  RenderConfig cfg{1.0, 5.0, 8, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);
  REQUIRE(hs.size() == 8);
  // noise off: bin midpoints
  CHECK(hs[0] == doctest::Approx(1.0 + 0.5 / 8 * 4.0).epsilon(1e-15));
  CHECK(hs[7] == doctest::Approx(1.0 + 7.5 / 8 * 4.0).epsilon(1e-15));

  cfg.stratified_noise = true;
  for (int t = 0; t < 20; ++t) {
    auto h = sample_along_ray(cfg, rng);
    for (size_t k = 0; k < h.size(); ++k) {
      CHECK(h[k] >= 1.0 + k / 8.0 * 4.0);
      CHECK(h[k] <= 1.0 + (k + 1) / 8.0 * 4.0);
      if (k) CHECK(h[k] > h[k - 1]);
    }
  }
}

TEST_CASE("empty space renders black with full transmittance") {
  auto vacuum = [](const Vec3&, const Vec3&) { return FieldSample{{0.2, 0.4, 0.6}, 0.0}; };
  RenderConfig cfg{0.1, 10.0, 64, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);
  Ray ray{{0, 0, 0}, {0, 0, 1}};
  RayRender r = composite_ray(vacuum, ray, hs, cfg.h_far);
  CHECK(r.color.x == 0.0);
  CHECK(r.depth == 0.0);
  CHECK(r.trans_residual == 1.0);
}

TEST_CASE("homogeneous medium matches the closed-form transmittance") {
  double sigma = 0.7;
  Vec3 c{0.9, 0.5, 0.3};
  auto fog = [&](const Vec3&, const Vec3&) { return FieldSample{c, sigma}; };
  RenderConfig cfg{0.5, 4.0, 256, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);
  Ray ray{{0, 0, 0}, {0, 0, 1}};
  RayRender r = composite_ray(fog, ray, hs, cfg.h_far);
  // total absorbed fraction from the first sample to the far plane
  double expect = 1.0 - std::exp(-sigma * (cfg.h_far - hs[0]));
  CHECK(r.color.x == doctest::Approx(c.x * expect).epsilon(1e-12));
  CHECK(r.color.y == doctest::Approx(c.y * expect).epsilon(1e-12));
  CHECK(r.trans_residual ==
        doctest::Approx(1.0 - expect).epsilon(1e-12));
}

TEST_CASE("compositing weights and the residual sum to one") {
  auto white = [](const Vec3& x, const Vec3&) {
    return FieldSample{{1.0, 1.0, 1.0}, 0.3 + 0.2 * std::sin(3.0 * x.z)};
  };
  RenderConfig cfg{0.1, 10.0, 1024, true, 5};
  Rng rng(9);
  Ray ray{{0.2, -0.1, 0}, {0, 0, 1}};
  for (int t = 0; t < 5; ++t) {
    auto hs = sample_along_ray(cfg, rng);
    RayRender r = composite_ray(white, ray, hs, cfg.h_far);
    CHECK(std::fabs(r.color.x + r.trans_residual - 1.0) < 1e-12);
  }
}

TEST_CASE("an opaque wall pins the expected depth") {
  double wall_z = 3.0;
  auto wall = [&](const Vec3& x, const Vec3&) {
    return FieldSample{{1, 0, 0}, x.z > wall_z ? 1e4 : 0.0};
  };
  RenderConfig cfg{0.1, 10.0, 512, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);
  Ray ray{{0, 0, 0}, {0, 0, 1}};
  RayRender r = composite_ray(wall, ray, hs, cfg.h_far);
  CHECK(r.depth == doctest::Approx(wall_z).epsilon(0.01));
  CHECK(r.trans_residual < 1e-10);
}

TEST_CASE("parallel and serial image renders are bit identical") {
  FieldConfig fcfg{2, 16, 4, 2};
  FieldParams theta = init_field(fcfg, 17);
  Intrinsics K{14, 14, 8, 8, 16, 16};
  PoseParam pose{{0.1, 0.0, 0.0}, {0, 0, 2.0}};
  RenderConfig cfg{0.1, 8.0, 16, true, 123};
  auto px = all_pixels(K.width, K.height);
  Image img_a(K.width, K.height), img_b(K.width, K.height);
  DepthMap dep_a(K.width, K.height), dep_b(K.width, K.height);
  render_image(theta, pose, K, cfg, px, img_a, dep_a);
  render_image_serial(theta, pose, K, cfg, px, img_b, dep_b);
  CHECK(img_a.rgb == img_b.rgb);
  CHECK(dep_a.values == dep_b.values);
}

TEST_CASE("stored depth is the z-component of the ray distance") {
  // opaque wall at z = 3 in camera frame; off-axis pixels travel farther
  // along the ray but the stored z-depth stays 3
  double wall_z = 3.0;
  auto wall = [&](const Vec3& x, const Vec3&) {
    return FieldSample{{1, 1, 1}, x.z > wall_z ? 1e4 : 0.0};
  };
  Intrinsics K{10, 10, 4, 4, 8, 8};
  PoseParam pose{};  // identity: camera frame == world frame
  RenderConfig cfg{0.1, 10.0, 2048, false, 0};
  Image img(8, 8);
  DepthMap dep(8, 8);
  auto px = all_pixels(8, 8);
  render_image_fn(wall, pose, K, cfg, px, img, dep);
  for (auto [u, v] : px) {
    CHECK(dep.at(u, v) == doctest::Approx(wall_z).epsilon(0.02));
  }
}

TEST_CASE("tape rendering reproduces the plain renderer") {
  FieldConfig fcfg{2, 12, 3, 1};
  FieldParams theta = init_field(fcfg, 71);
  Intrinsics K{10, 10, 5, 5, 10, 10};
  PoseParam pose{{0.05, -0.1, 0.02}, {0.1, 0.0, 1.5}};
  RenderConfig cfg{0.2, 6.0, 24, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);
  Ray ray = camera_ray(pose, K, 4, 6);
  RayRender plain = composite_ray(
      [&](const Vec3& x, const Vec3& d) { return eval_field(theta, x, d); },
      ray, hs, cfg.h_far);

  Tape tape;
  uint32_t base = tape.leaf_block(theta.values);
  PoseVars pv{
      {tape.leaf(pose.phi.x), tape.leaf(pose.phi.y), tape.leaf(pose.phi.z)},
      {tape.leaf(pose.t.x), tape.leaf(pose.t.y), tape.leaf(pose.t.z)}};
  RayVars rv = camera_ray_var(pv, K, 4, 6);
  RayRenderVar out = render_ray_var(tape, fcfg, base, rv, hs, cfg.h_far);
  CHECK(out.color.x.val() == doctest::Approx(plain.color.x).epsilon(1e-12));
  CHECK(out.color.y.val() == doctest::Approx(plain.color.y).epsilon(1e-12));
  CHECK(out.color.z.val() == doctest::Approx(plain.color.z).epsilon(1e-12));
  CHECK(out.depth.val() == doctest::Approx(plain.depth).epsilon(1e-12));
  CHECK(out.trans_residual.val() ==
        doctest::Approx(plain.trans_residual).epsilon(1e-12));
}

TEST_CASE("rendered color gradients pass a finite-difference spot check") {
  FieldConfig fcfg{1, 8, 2, 1};
  FieldParams theta = init_field(fcfg, 72);
  Intrinsics K{10, 10, 5, 5, 10, 10};
  PoseParam pose{{0.0, 0.1, 0.0}, {0.0, 0.0, 1.2}};
  RenderConfig cfg{0.2, 6.0, 12, false, 0};
  Rng rng(0);
  auto hs = sample_along_ray(cfg, rng);

  auto eval_red = [&](const FieldParams& th, const PoseParam& ps) {
    Ray ray = camera_ray(ps, K, 3, 5);
    return composite_ray([&](const Vec3& x, const Vec3& d) {
             return eval_field(th, x, d);
           }, ray, hs, cfg.h_far)
        .color.x;
  };

  Tape tape;
  uint32_t base = tape.leaf_block(theta.values);
  PoseVars pv{
      {tape.leaf(pose.phi.x), tape.leaf(pose.phi.y), tape.leaf(pose.phi.z)},
      {tape.leaf(pose.t.x), tape.leaf(pose.t.y), tape.leaf(pose.t.z)}};
  RayVars rv = camera_ray_var(pv, K, 3, 5);
  RayRenderVar out = render_ray_var(tape, fcfg, base, rv, hs, cfg.h_far);
  tape.backward(out.color.x);

  double h = 1e-6;
  Rng pick(3);
  for (int t = 0; t < 10; ++t) {
    size_t i = pick.uniform_int(theta.values.size());
    FieldParams tp = theta, tm = theta;
    tp.values[i] += h;
    tm.values[i] -= h;
    double fd = (eval_red(tp, pose) - eval_red(tm, pose)) / (2 * h);
    double g = tape.grad(base + uint32_t(i));
    CHECK(std::fabs(g - fd) <
          1e-5 * std::max({std::fabs(g), std::fabs(fd), 1.0}));
  }
  // pose translation z
  PoseParam pp = pose, pm = pose;
  pp.t.z += h;
  pm.t.z -= h;
  double fd = (eval_red(theta, pp) - eval_red(theta, pm)) / (2 * h);
  CHECK(std::fabs(tape.grad(pv.t.z.idx) - fd) <
        1e-5 * std::max(std::fabs(fd), 1.0));
}
