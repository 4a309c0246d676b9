#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "npnf/eval.hpp"
#include "npnf/rng.hpp"
#include "npnf/synth.hpp"

using namespace npnf;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<Vec3> random_points(Rng& rng, size_t n) {
  std::vector<Vec3> out;
  for (size_t i = 0; i < n; ++i)
    out.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
  return out;
}
}  // namespace

TEST_CASE("similarity alignment recovers a known transform") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto src = random_points(rng, 12);
    Sim3 gt;
    gt.scale = rng.uniform(0.3, 3.0);
    gt.R = exp_so3({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    gt.t = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(gt.apply(p));
    Sim3 est = umeyama_sim3(src, dst);
    CHECK(std::fabs(est.scale - gt.scale) < 1e-9);
    for (int i = 0; i < 9; ++i) CHECK(std::fabs(est.R.m[i] - gt.R.m[i]) < 1e-9);
    CHECK(norm3(est.t - gt.t) < 1e-9);
    for (size_t i = 0; i < src.size(); ++i)
      CHECK(norm3(est.apply(src[i]) - dst[i]) < 1e-9);
  }
}

TEST_CASE("collinear points cannot fix a similarity") {
  std::vector<Vec3> src{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  std::vector<Vec3> dst = src;
  CHECK_THROWS_AS(umeyama_sim3(src, dst), DegenerateConfiguration);
}

TEST_CASE("a similarity copy of the trajectory has zero ATE") {
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 6, TrajectoryParams{});
  Sim3 g;
  g.scale = 1.7;
  g.R = exp_so3({0.3, -0.6, 0.2});
  g.t = {1, -2, 0.5};
  std::vector<PoseParam> est;
  for (const PoseParam& p : traj.poses) {
    RigidTransform T = pose_to_transform(p);
    // move the camera center through the similarity, keep orientation
    Vec3 c = g.apply(camera_center(T));
    PoseParam q = p;
    Vec3 rc = matvec(T.R, c);
    q.t = {-rc.x, -rc.y, -rc.z};
    est.push_back(q);
  }
  CHECK(ate(est, traj.poses) < 1e-9);
  CHECK(ate(traj.poses, traj.poses) < 1e-12);
}

TEST_CASE("perturbing one camera center raises ATE") {
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 6, TrajectoryParams{});
  std::vector<PoseParam> est = traj.poses;
  est[2].t.x += 0.4;
  double e = ate(est, traj.poses);
  CHECK(e > 0.01);
  CHECK(e < 0.4);  // alignment absorbs part of a single-frame offset
}

TEST_CASE("one rotated frame gives a closed-form rotational RPE") {
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 6, TrajectoryParams{});
  double theta = 2.0 * kPi / 180.0;  // 2 degrees
  std::vector<PoseParam> est = traj.poses;
  // rotate frame 2's orientation about its own axis, keeping the center:
  // c2w A' = A * B means w2c R' = B^T R, t' = B^T t
  {
    RigidTransform T = pose_to_transform(est[2]);
    Mat3 Bt = transposed(exp_so3({0, theta, 0}));
    RigidTransform T2{matmul(Bt, T.R), matvec(Bt, T.t)};
    est[2] = transform_to_pose(T2);
  }
  auto [rpe_t, rpe_r] = rpe(est, traj.poses, 1);
  // 5 pairs, two of them carry an angle error of theta: RMSE over pairs
  double expect = std::sqrt(2.0 * theta * theta / 5.0) * 180.0 / kPi;
  CHECK(rpe_r == doctest::Approx(expect).epsilon(1e-6));
  CHECK(rpe_t >= 0.0);
  auto [zt, zr] = rpe(traj.poses, traj.poses, 1);
  CHECK(zt < 1e-12);
  CHECK(zr < 1e-9);
}

TEST_CASE("depth metrics on a four-pixel hand case") {
  DepthMap gt(2, 2), pred(2, 2);
  gt.values = {1, 2, 4, 8};
  pred.values = {1.25, 2, 4, 8};
  std::vector<bool> mask(4, true);
  DepthMetrics m = depth_metrics(pred, gt, mask);
  // medians match (both 4), so the scale is exactly 1
  CHECK(m.abs_rel == doctest::Approx(0.0625).epsilon(1e-9));
  CHECK(m.sq_rel == doctest::Approx(0.015625).epsilon(1e-9));
  CHECK(m.rmse == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(m.rmse_log == doctest::Approx(std::log(1.25) / 2.0).epsilon(1e-9));
  CHECK(m.delta1 == doctest::Approx(0.75).epsilon(1e-12));  // ratio==1.25 fails <
  CHECK(m.delta2 == doctest::Approx(1.0));
  CHECK(m.delta3 == doctest::Approx(1.0));
}

TEST_CASE("median scaling removes a global depth scale") {
  DepthMap gt(2, 2), pred(2, 2);
  gt.values = {1, 2, 4, 8};
  for (int i = 0; i < 4; ++i) pred.values[i] = 3.0 * gt.values[i];
  std::vector<bool> mask(4, true);
  DepthMetrics m = depth_metrics(pred, gt, mask);
  CHECK(m.abs_rel == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m.delta1 == doctest::Approx(1.0));
  std::vector<bool> none(4, false);
  CHECK_THROWS_AS(depth_metrics(pred, gt, none), EmptyMask);
}

TEST_CASE("psnr hand cases") {
  Image a(2, 2), b(2, 2);
  for (auto& v : b.rgb) v = 0.5;
  // MSE 0.25 -> 10 log10(4)
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-9));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);
}

TEST_CASE("ssim of uniform images follows the closed form") {
  Image a(16, 16), b(16, 16);
  for (auto& v : a.rgb) v = 0.3;
  for (auto& v : b.rgb) v = 0.6;
  double c1 = 1e-4;
  double expect = (2 * 0.3 * 0.6 + c1) / (0.3 * 0.3 + 0.6 * 0.6 + c1);
  CHECK(ssim(a, b) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim penalizes structural noise more than psnr-equivalent bias") {
  Rng rng(23);
  Image base(16, 16), noisy(16, 16), biased(16, 16);
  for (size_t i = 0; i < base.rgb.size(); ++i) {
    base.rgb[i] = 0.5 + 0.3 * std::sin(double(i) * 0.1);
    noisy.rgb[i] = std::clamp(base.rgb[i] + rng.uniform(-0.2, 0.2), 0.0, 1.0);
    biased.rgb[i] = std::clamp(base.rgb[i] + 0.1, 0.0, 1.0);
  }
  CHECK(ssim(base, noisy) < ssim(base, biased));
  CHECK(ssim(base, noisy) < 1.0);
  CHECK(ssim(base, noisy) > 0.0);
}

TEST_CASE("svg diagnostics render to files") {
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 5, TrajectoryParams{});
  auto tmp = std::filesystem::temp_directory_path() / "npnf_eval_svg";
  std::filesystem::create_directories(tmp);
  write_trajectory_svg(tmp / "traj.svg", traj.poses, traj.poses);
  std::vector<double> bars{0.1, 0.5, 0.2};
  write_rpe_svg(tmp / "rpe.svg", bars);
  CHECK(std::filesystem::file_size(tmp / "traj.svg") > 100);
  CHECK(std::filesystem::file_size(tmp / "rpe.svg") > 100);
}
