#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/depthprior.hpp"
#include "npnf/geom.hpp"
#include "npnf/io.hpp"

namespace npnf {

struct Sphere {
  Vec3 center;
  double radius;
  Vec3 color;
  double density;
};

// Constant-density spheres so every render has a closed-form check.
// Textured spheres modulate color with a low-frequency sinusoid of
// position, giving the surface losses something to grab onto.
struct AnalyticScene {
  std::vector<Sphere> spheres;
  Vec3 background{0, 0, 0};
  bool textured = false;

  // density and color at a point (first containing sphere wins)
  double density_at(const Vec3& x) const;
  Vec3 color_at(const Vec3& x) const;
};

AnalyticScene default_scene(bool textured);

// default_scene plus a two-layer wall of spheres behind it that fills the
// whole field of view of an orbit-radius-4 camera rig. Rays that miss all
// geometry get background depth, which is camera-attached and gives the
// point-cloud loss a spurious optimum at the identity relative pose;
// recovery fixtures therefore need a scene with full depth coverage.
// Designed for near/far (0.5, 12).
AnalyticScene walled_scene(bool textured);

enum class TrajectoryKind { kOrbit, kForward, kArc };

struct Trajectory {
  TrajectoryKind kind;
  std::vector<PoseParam> poses;  // world-to-camera
  double max_pairwise_rotation_deg = 0.0;
};

struct TrajectoryParams {
  double orbit_radius = 4.0;
  double sweep_deg = 60.0;     // orbit/arc total sweep
  double forward_step = 0.3;   // forward kind
  double jitter_deg = 0.0;     // forward kind rotation jitter
  uint64_t seed = 0;
};

Trajectory make_trajectory(TrajectoryKind kind, int n_frames,
                           const TrajectoryParams& params);

// Independent dense-quadrature render of the analytic scene; the oracle
// the NeRF renderer is checked against. GT depth is the first analytic
// ray-sphere intersection (h_far where the ray misses everything).
void oracle_render(const AnalyticScene& scene, const PoseParam& pose,
                   const Intrinsics& K, int n_quad, double h_near,
                   double h_far, Image& img, DepthMap& depth);

// First intersection distance along the ray, or h_far.
double first_hit_depth(const AnalyticScene& scene, const Ray& ray,
                       double h_near, double h_far);

struct DistortionSpec {
  std::vector<DistortionParam> gt;  // alpha/beta per frame; last = (1, 0)
};

DistortionSpec identity_distortion(int n_frames);
// alpha in [0.7, 1.4], beta in +-0.2 * depth_scale, last frame pinned
DistortionSpec random_distortion(int n_frames, double depth_scale,
                                 uint64_t seed);

struct SynthDataset {
  TrainDataset train;                    // images + distorted pseudo-depths
  std::vector<DepthMap> gt_depth;        // true z-depths
  std::vector<PoseParam> gt_poses;
  std::vector<DistortionParam> gt_dists;
};

// Renders every frame with the oracle and injects distortions:
// distorted = (gt_depth - beta) / alpha, so undistort(distorted, gt) = gt.
SynthDataset make_dataset(const AnalyticScene& scene,
                          const Trajectory& trajectory, const Intrinsics& K,
                          int n_quad, double h_near, double h_far,
                          const DistortionSpec& distortion);

void save_synth_dataset(const std::filesystem::path& dir,
                        const SynthDataset& data, uint64_t seed);

}  // namespace npnf
