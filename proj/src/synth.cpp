#include "npnf/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

#include "npnf/render.hpp"
#include "npnf/rng.hpp"

namespace npnf {

namespace {

double texture_factor(const Vec3& x) {
  return 0.65 + 0.35 * std::sin(4.0 * x.x + 7.0 * x.y + 5.0 * x.z);
}

}  // namespace

double AnalyticScene::density_at(const Vec3& x) const {
  for (const Sphere& s : spheres) {
    Vec3 d = x - s.center;
    if (dot3(d, d) <= s.radius * s.radius) return s.density;
  }
  return 0.0;
}

Vec3 AnalyticScene::color_at(const Vec3& x) const {
  for (const Sphere& s : spheres) {
    Vec3 d = x - s.center;
    if (dot3(d, d) <= s.radius * s.radius) {
      if (!textured) return s.color;
      double m = texture_factor(x);
      return {std::clamp(s.color.x * m, 0.0, 1.0),
              std::clamp(s.color.y * m, 0.0, 1.0),
              std::clamp(s.color.z * m, 0.0, 1.0)};
    }
  }
  return background;
}

AnalyticScene default_scene(bool textured) {
  AnalyticScene scene;
  scene.textured = textured;
  scene.spheres = {
      {{0.0, 0.0, 0.0}, 1.0, {0.85, 0.45, 0.25}, 60.0},
      {{0.9, 0.6, 0.7}, 0.45, {0.25, 0.65, 0.85}, 60.0},
      {{-0.8, -0.5, 0.5}, 0.4, {0.35, 0.8, 0.35}, 60.0},
  };
  return scene;
}

AnalyticScene walled_scene(bool textured) {
  AnalyticScene scene = default_scene(textured);
  const Vec3 palette[5] = {{0.8, 0.3, 0.3},
                           {0.3, 0.7, 0.4},
                           {0.35, 0.45, 0.85},
                           {0.85, 0.75, 0.3},
                           {0.6, 0.35, 0.75}};
  int k = 0;
  // spacing 1.7 with radius 1.25 leaves no gaps in projection
  // (max in-plane distance to a center is 1.7/sqrt(2) ~ 1.20 < 1.25);
  // the staggered second layer catches oblique rays.
  for (int gy = -3; gy <= 3; ++gy)
    for (int gx = -3; gx <= 3; ++gx)
      scene.spheres.push_back({{1.7 * gx, 1.7 * gy, 3.2 + 0.15 * ((gx + gy) & 1)},
                               1.25,
                               palette[k++ % 5],
                               60.0});
  for (int gy = -3; gy <= 2; ++gy)
    for (int gx = -3; gx <= 2; ++gx)
      scene.spheres.push_back(
          {{1.7 * gx + 0.85, 1.7 * gy + 0.85, 4.7}, 1.25, palette[k++ % 5], 60.0});
  return scene;
}

namespace {

// world-to-camera look-at; camera z points at the target
RigidTransform look_at(const Vec3& pos, const Vec3& target) {
  Vec3 f = normalized3(target - pos);
  Vec3 x = normalized3(cross3(Vec3{0, 1, 0}, f));
  Vec3 y = cross3(f, x);
  Mat3 R_c2w{{x.x, y.x, f.x, x.y, y.y, f.y, x.z, y.z, f.z}};
  Mat3 R = transposed(R_c2w);
  Vec3 t = matvec(R, pos) * -1.0;
  return {R, t};
}

double rotation_angle_deg(const Mat3& A, const Mat3& B) {
  Mat3 E = matmul(A, transposed(B));
  double c = std::clamp((E(0, 0) + E(1, 1) + E(2, 2) - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c) * 180.0 / M_PI;
}

}  // namespace

Trajectory make_trajectory(TrajectoryKind kind, int n_frames,
                           const TrajectoryParams& params) {
  Trajectory traj;
  traj.kind = kind;
  Rng rng(params.seed);
  double sweep = params.sweep_deg * M_PI / 180.0;
  std::vector<RigidTransform> transforms;
  for (int k = 0; k < n_frames; ++k) {
    double s = n_frames > 1 ? double(k) / (n_frames - 1) : 0.0;
    if (kind == TrajectoryKind::kForward) {
      Vec3 pos{0, 0, -params.orbit_radius + s * params.forward_step * n_frames};
      RigidTransform T = look_at(pos, {0, 0, params.orbit_radius});
      if (params.jitter_deg > 0) {
        double ang = rng.uniform(-1.0, 1.0) * params.jitter_deg * M_PI / 180.0;
        Vec3 axis = normalized3(
            {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        T.R = matmul(exp_so3(axis * ang), T.R);
      }
      transforms.push_back(T);
    } else {
      double theta = (s - 0.5) * sweep;
      Vec3 pos{params.orbit_radius * std::sin(theta), 0.0,
               -params.orbit_radius * std::cos(theta)};
      if (kind == TrajectoryKind::kOrbit) {
        transforms.push_back(look_at(pos, {0, 0, 0}));
      } else {  // arc: translate along the circle, orientation of frame 0
        if (transforms.empty()) {
          transforms.push_back(look_at(pos, {0, 0, 0}));
        } else {
          Mat3 R = transforms.front().R;
          transforms.push_back({R, matvec(R, pos) * -1.0});
        }
      }
    }
  }
  double max_rot = 0.0;
  for (size_t a = 0; a < transforms.size(); ++a)
    for (size_t b = a + 1; b < transforms.size(); ++b)
      max_rot = std::max(max_rot,
                         rotation_angle_deg(transforms[a].R, transforms[b].R));
  traj.max_pairwise_rotation_deg = max_rot;
  for (const auto& T : transforms)
    traj.poses.push_back(canonicalize(transform_to_pose(T)));
  return traj;
}

double first_hit_depth(const AnalyticScene& scene, const Ray& ray,
                       double h_near, double h_far) {
  double best = h_far;
  for (const Sphere& s : scene.spheres) {
    Vec3 oc = ray.origin - s.center;
    double b = dot3(oc, ray.dir);
    double c = dot3(oc, oc) - s.radius * s.radius;
    double disc = b * b - c;
    if (disc < 0) continue;
    double sq = std::sqrt(disc);
    for (double h : {-b - sq, -b + sq}) {
      if (h >= h_near && h < best) best = h;
    }
  }
  return best;
}

void oracle_render(const AnalyticScene& scene, const PoseParam& pose,
                   const Intrinsics& K, int n_quad, double h_near,
                   double h_far, Image& img, DepthMap& depth) {
  img = Image(K.width, K.height);
  depth = DepthMap(K.width, K.height);
  double bin = (h_far - h_near) / n_quad;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      Ray ray = camera_ray(pose, K, u, v);
      // fixed mid-bin quadrature, written independently of the renderer
      double T = 1.0;
      Vec3 color{0, 0, 0};
      for (int k = 0; k < n_quad; ++k) {
        double h = h_near + (k + 0.5) * bin;
        Vec3 x = ray.origin + ray.dir * h;
        double sigma = scene.density_at(x);
        if (sigma > 0.0) {
          double a = 1.0 - std::exp(-sigma * bin);
          color = color + scene.color_at(x) * (T * a);
          T *= 1.0 - a;
          if (T < 1e-10) break;
        }
      }
      color = color + scene.background * T;
      double* px = img.pixel(u, v);
      px[0] = color.x;
      px[1] = color.y;
      px[2] = color.z;
      // z-depth of the first analytic intersection
      double h0 = first_hit_depth(scene, ray, h_near, h_far);
      Vec3 dc = pixel_dir_cam(K, u, v);
      depth.at(u, v) = h0 * dc.z;
    }
  }
}

DistortionSpec identity_distortion(int n_frames) {
  DistortionSpec spec;
  spec.gt.assign(size_t(n_frames), DistortionParam{1.0, 0.0});
  return spec;
}

DistortionSpec random_distortion(int n_frames, double depth_scale,
                                 uint64_t seed) {
  DistortionSpec spec;
  Rng rng(seed);
  for (int k = 0; k < n_frames; ++k) {
    spec.gt.push_back({rng.uniform(0.7, 1.4),
                       rng.uniform(-0.2, 0.2) * depth_scale});
  }
  spec.gt.back() = {1.0, 0.0};  // pinning convention must be achievable
  return spec;
}

SynthDataset make_dataset(const AnalyticScene& scene,
                          const Trajectory& trajectory, const Intrinsics& K,
                          int n_quad, double h_near, double h_far,
                          const DistortionSpec& distortion) {
  SynthDataset data;
  data.train.K = K;
  data.gt_poses = trajectory.poses;
  data.gt_dists = distortion.gt;
  for (size_t i = 0; i < trajectory.poses.size(); ++i) {
    Image img;
    DepthMap gt;
    oracle_render(scene, trajectory.poses[i], K, n_quad, h_near, h_far, img, gt);
    const DistortionParam& psi = distortion.gt[i];
    DepthMap distorted = gt;
    for (double& v : distorted.values) v = (v - psi.beta) / psi.alpha;
    data.train.images.push_back(std::move(img));
    data.train.pseudo_depth.push_back(std::move(distorted));
    data.gt_depth.push_back(std::move(gt));
  }
  return data;
}

void save_synth_dataset(const std::filesystem::path& dir,
                        const SynthDataset& data, uint64_t seed) {
  save_dataset(dir, data.train, data.gt_depth, data.gt_poses, data.gt_dists,
               seed);
}

}  // namespace npnf
