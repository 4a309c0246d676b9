#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "npnf/depthprior.hpp"
#include "npnf/field.hpp"
#include "npnf/geom.hpp"
#include "npnf/render.hpp"

namespace npnf {

struct LossWeights {
  double lambda1 = 0.04;  // depth
  double lambda2 = 1.0;   // point cloud
  double lambda3 = 1.0;   // surface photometric
};

struct LossReport {
  double l_rgb = 0, l_depth = 0, l_pc = 0, l_rgbs = 0, total = 0;
  size_t n_rgb = 0, n_depth = 0, n_pc = 0, n_rgbs = 0;
  int skipped_pairs = 0;
  // branch bookkeeping from the inter-frame terms (see PairLock)
  double pair_scale = 0.0;
  std::vector<uint8_t> rgbs_mask;
};

// The combined objective is piecewise smooth: the point-cloud normalization
// scale is treated as a constant during backprop, and surface-photometric
// terms drop out when a projection leaves the image. A finite-difference
// probe of the raw objective therefore disagrees with the analytic gradient
// at branch switches. Passing the lock recorded by a base evaluation pins
// the scale and the active term set so FD probes stay on the branch the
// gradient was computed for.
struct PairLock {
  double scale = 0.0;
  std::vector<uint8_t> rgbs_mask;
};

// Images + distorted pseudo-depths for one sequence.
struct TrainDataset {
  Intrinsics K;
  std::vector<Image> images;
  std::vector<DepthMap> pseudo_depth;
  size_t frame_count() const { return images.size(); }
};

struct Gradients {
  std::vector<double> theta;
  std::vector<double> poses;  // 6 per frame: phi, t
  std::vector<double> dists;  // 2 per frame: alpha, beta

  Gradients() = default;
  Gradients(size_t n_theta, size_t n_frames)
      : theta(n_theta, 0.0), poses(6 * n_frames, 0.0), dists(2 * n_frames, 0.0) {}
  void reset() {
    theta.assign(theta.size(), 0.0);
    poses.assign(poses.size(), 0.0);
    dists.assign(dists.size(), 0.0);
  }
};

// All randomness of one frame visit, drawn up front so the loss is a pure
// function of the parameters (finite differences stay valid).
struct StepSample {
  int frame = 0;
  bool has_pair = false;  // consecutive pair (frame, frame + 1)
  std::vector<std::pair<int, int>> ray_pixels;
  std::vector<std::vector<double>> ray_hs;  // per-ray quadrature depths
  std::vector<std::pair<int, int>> cloud_pixels_i;
  std::vector<std::pair<int, int>> cloud_pixels_j;
};

StepSample make_step_sample(const TrainDataset& data, int frame,
                            size_t rays_per_image, size_t cloud_points,
                            const RenderConfig& rcfg,
                            std::span<const DistortionParam> dists, Rng& rng);

// ---- standalone loss terms (plain arithmetic, used by tests/eval) ----

// mean squared error over pixels and channels
double loss_rgb(std::span<const Vec3> rendered, std::span<const Vec3> target);

// mean absolute error
double loss_depth(std::span<const double> undistorted,
                  std::span<const double> rendered);

// symmetric sum of per-side mean nearest-neighbor Euclidean distances,
// exact brute-force matching
double chamfer(const PointCloud& pi, const PointCloud& pj);

double loss_pc_pair(const PointCloud& cloud_i, const PointCloud& cloud_j,
                    const RigidTransform& Ti, const RigidTransform& Tj);

double loss_rgb_surface_pair(const PointCloud& cloud_i,
                             const RigidTransform& Ti,
                             const RigidTransform& Tj, const Image& img_i,
                             const Image& img_j, const Intrinsics& K);

// clamped bilinear lookup; ties at cell boundaries resolve to the lower cell
Vec3 bilinear_sample(const Image& img, double u, double v);

// ---- combined objective ----

struct FieldParamRef {
  const FieldConfig* config;
  std::span<const double> values;
};

// Evaluates L = l_rgb + l1*l_depth + l2*l_pc + l3*l_rgbs on the given frame
// visit and accumulates gradients over (theta, poses, distortions) when
// grads is non-null. Ray batches run on per-chunk tapes combined in fixed
// chunk order, so results are deterministic at any thread count.
LossReport total_loss(const TrainDataset& data, const FieldParamRef& theta,
                      std::span<const PoseParam> poses,
                      std::span<const DistortionParam> dists,
                      const LossWeights& weights, const RenderConfig& rcfg,
                      const StepSample& sample, Gradients* grads,
                      const PairLock* lock = nullptr);

}  // namespace npnf
