#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/geom.hpp"

namespace npnf {

struct Sim3 {
  double scale = 1.0;
  Mat3 R = mat3_identity();
  Vec3 t{};

  Vec3 apply(const Vec3& x) const { return matvec(R, x) * scale + t; }
};

// Least-squares similarity aligning source onto target, det(R) = +1
// enforced; DegenerateConfiguration for collinear inputs.
Sim3 umeyama_sim3(std::span<const Vec3> source, std::span<const Vec3> target);

struct PoseMetrics {
  double ate_rmse = 0.0;  // scene units
  double rpe_t = 0.0;     // scene units (callers scale by 100 when reporting)
  double rpe_r = 0.0;     // degrees
};

// RMSE of camera positions after Sim(3) alignment of the estimated
// trajectory onto ground truth.
double ate(std::span<const PoseParam> est, std::span<const PoseParam> gt);

// Relative pose error over pairs (i, i+delta); the estimate is pre-scaled
// by the Sim(3) scale from ATE alignment.
std::pair<double, double> rpe(std::span<const PoseParam> est,
                              std::span<const PoseParam> gt, int delta = 1);

PoseMetrics pose_metrics(std::span<const PoseParam> est,
                         std::span<const PoseParam> gt);

struct DepthMetrics {
  double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0;
  double delta1 = 0, delta2 = 0, delta3 = 0;
};

// Median-scales pred to gt over the mask first; thresholds 1.25^{1,2,3}.
DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           const std::vector<bool>& mask);

// 10 log10(1 / MSE) on [0,1] images; identical images report +infinity.
double psnr(const Image& a, const Image& b);

// 11x11 Gaussian window, sigma 1.5, C1=0.01^2, C2=0.03^2, per-channel mean.
double ssim(const Image& a, const Image& b);

// Fig-style diagnostics: trajectory polyline (x-z orthographic) and
// per-pair rotation error bars.
void write_trajectory_svg(const std::filesystem::path& path,
                          std::span<const PoseParam> est,
                          std::span<const PoseParam> gt);
void write_rpe_svg(const std::filesystem::path& path,
                   std::span<const double> rpe_r_deg);

}  // namespace npnf
