#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/tape.hpp"

namespace npnf {

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;
};

// Axis-angle rotation + translation, the per-frame pose parameterization.
struct PoseParam {
  Vec3 phi{};
  Vec3 t{};
};

// World-to-camera: x_cam = R * x_world + t.
struct RigidTransform {
  Mat3 R = mat3_identity();
  Vec3 t{};
};

struct Ray {
  Vec3 origin{};
  Vec3 dir{};  // unit
};

// Points in one coordinate frame, with the pixels they came from.
enum class CloudFrame { kCamera, kWorld };
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::pair<int, int>> pixels;
  CloudFrame frame = CloudFrame::kCamera;
};

// Rodrigues formula; second-order Taylor below theta = 1e-6 keeps the
// small-angle branch differentiable.
template <class T>
Mat3T<T> exp_so3_t(const Vec3T<T>& phi) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  T t2 = dot3(phi, phi);
  T a, b;
  if (value_of(t2) < 1e-12) {
    a = 1.0 - t2 * (1.0 / 6.0);
    b = 0.5 - t2 * (1.0 / 24.0);
  } else {
    T th = sqrt(t2);
    a = sin(th) / th;
    b = (1.0 - cos(th)) / t2;
  }
  const T &x = phi.x, &y = phi.y, &z = phi.z;
  Mat3T<T> R;
  R(0, 0) = 1.0 + b * (x * x - t2);
  R(0, 1) = b * (x * y) - a * z;
  R(0, 2) = b * (x * z) + a * y;
  R(1, 0) = b * (x * y) + a * z;
  R(1, 1) = 1.0 + b * (y * y - t2);
  R(1, 2) = b * (y * z) - a * x;
  R(2, 0) = b * (x * z) - a * y;
  R(2, 1) = b * (y * z) + a * x;
  R(2, 2) = 1.0 + b * (z * z - t2);
  return R;
}

inline Mat3 exp_so3(const Vec3& phi) { return exp_so3_t(phi); }

// Inverse of exp_so3, with branches for small angles and angles near pi.
Vec3 log_so3(const Mat3& R);

// Re-wraps phi so that ||phi|| < pi.
PoseParam canonicalize(const PoseParam& p);

inline RigidTransform pose_to_transform(const PoseParam& p) {
  return RigidTransform{exp_so3(p.phi), p.t};
}

inline PoseParam transform_to_pose(const RigidTransform& T) {
  return PoseParam{log_so3(T.R), T.t};
}

inline Vec3 apply_transform(const RigidTransform& T, const Vec3& x) {
  return matvec(T.R, x) + T.t;
}

inline RigidTransform inverse(const RigidTransform& T) {
  Mat3 Rt = transposed(T.R);
  Vec3 mt = matvec(Rt, T.t);
  return RigidTransform{Rt, {-mt.x, -mt.y, -mt.z}};
}

// T_ji = T_j * T_i^-1: maps camera-i coordinates to camera-j coordinates.
inline RigidTransform relative_pose(const RigidTransform& Ti,
                                    const RigidTransform& Tj) {
  Mat3 R = matmul(Tj.R, transposed(Ti.R));
  Vec3 Rti = matvec(R, Ti.t);
  return RigidTransform{R, {Tj.t.x - Rti.x, Tj.t.y - Rti.y, Tj.t.z - Rti.z}};
}

inline Vec3 camera_center(const RigidTransform& T) {
  Vec3 c = matvec(transposed(T.R), T.t);
  return {-c.x, -c.y, -c.z};
}

// Unit camera-frame direction through pixel center (u+0.5, v+0.5).
inline Vec3 pixel_dir_cam(const Intrinsics& K, double u, double v) {
  return normalized3(
      Vec3{(u + 0.5 - K.cx) / K.fx, (v + 0.5 - K.cy) / K.fy, 1.0});
}

Ray camera_ray(const PoseParam& p, const Intrinsics& K, double u, double v);

// Camera-frame point for pixel (u,v) at given depth (z-depth convention).
inline Vec3 backproject_pixel(const Intrinsics& K, double u, double v,
                              double depth) {
  return {depth * (u + 0.5 - K.cx) / K.fx, depth * (v + 0.5 - K.cy) / K.fy,
          depth};
}

PointCloud backproject(const DepthMap& depth, const Intrinsics& K,
                       std::span<const std::pair<int, int>> pixels);

inline constexpr double kProjectZMin = 1e-4;

struct Projection {
  std::vector<std::pair<double, double>> uv;
  std::vector<bool> visible;
};

// Pinhole projection with near-plane and image-bounds masking; bad points
// are masked, never an error.
Projection project(const PointCloud& cloud, const Intrinsics& K);

// ---- tape-side mirrors used by the losses ----

struct TransformVar {
  Mat3T<Var> R;
  Vec3T<Var> t;
};

struct PoseVars {
  Vec3T<Var> phi;
  Vec3T<Var> t;
};

TransformVar pose_to_transform_var(const PoseVars& p);

// T_j * T_i^-1 on the tape; rotations already materialized.
TransformVar relative_pose_var(const TransformVar& Ti, const TransformVar& Tj);

inline Vec3T<Var> apply_transform_var(const TransformVar& T,
                                      const Vec3T<Var>& x) {
  return matvec(T.R, x) + T.t;
}

struct RayVars {
  Vec3T<Var> origin;
  Vec3T<Var> dir;
};

// Differentiable ray through a pixel: origin -R^T t, direction R^T d_cam.
RayVars camera_ray_var(const PoseVars& p, const Intrinsics& K, double u,
                       double v);

}  // namespace npnf
