#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/geom.hpp"
#include "npnf/rng.hpp"
#include "npnf/tape.hpp"

namespace npnf {

// Per-frame linear depth correction D* = alpha * D + beta.
struct DistortionParam {
  double alpha = 1.0;
  double beta = 0.0;
};

inline constexpr double kAlphaMin = 1e-4;

DepthMap undistort(const DepthMap& d, const DistortionParam& psi);

// Samples n_points pixels uniformly without replacement, undistorts and
// back-projects into the camera frame. Non-positive undistorted depths are
// skipped; resampling fills the quota up to a 4x attempt budget.
PointCloud build_cloud(const DepthMap& d, const DistortionParam& psi,
                       const Intrinsics& K, size_t n_points, Rng& rng);

// Divides both clouds by the mean point norm of the reference cloud Pj.
// The scale is a plain number (no gradient flows through it downstream).
struct NormalizedPair {
  PointCloud pi, pj;
  double scale;
};
NormalizedPair normalize_pair(const PointCloud& pi, const PointCloud& pj);

// Mean point norm of a cloud; DegenerateCloud below 1e-9.
double cloud_scale(const PointCloud& cloud);

// Tape-side cloud: undistorted depth and back-projection as Vars so
// gradients reach (alpha, beta) and, after transforming, the poses.
struct CloudVars {
  std::vector<Vec3T<Var>> points;
  std::vector<std::pair<int, int>> pixels;
};

struct DistortionVars {
  Var alpha, beta;
};

// Builds the differentiable cloud for the pixels selected beforehand
// (selection and validity are decided on plain values by build_cloud).
CloudVars build_cloud_var(Tape& tape, const DepthMap& d,
                          const DistortionVars& psi, const Intrinsics& K,
                          std::span<const std::pair<int, int>> pixels);

}  // namespace npnf
