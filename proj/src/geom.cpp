#include "npnf/geom.hpp"

#include <algorithm>

namespace npnf {

Vec3 log_so3(const Mat3& R) {
  double tr = R(0, 0) + R(1, 1) + R(2, 2);
  double c = std::clamp((tr - 1.0) * 0.5, -1.0, 1.0);
  double theta = std::acos(c);
  Vec3 w{R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1)};
  if (theta < 1e-8) {
    return w * 0.5;
  }
  if (theta > M_PI - 1e-4) {
    // Antisymmetric part vanishes; recover the axis from R + I.
    Vec3 axis;
    double d0 = R(0, 0) + 1.0, d1 = R(1, 1) + 1.0, d2 = R(2, 2) + 1.0;
    if (d0 >= d1 && d0 >= d2) {
      axis = {std::sqrt(std::max(d0 * 0.5, 0.0)), 0, 0};
      axis.y = R(0, 1) / (2.0 * axis.x);
      axis.z = R(0, 2) / (2.0 * axis.x);
    } else if (d1 >= d2) {
      axis = {0, std::sqrt(std::max(d1 * 0.5, 0.0)), 0};
      axis.x = R(0, 1) / (2.0 * axis.y);
      axis.z = R(1, 2) / (2.0 * axis.y);
    } else {
      axis = {0, 0, std::sqrt(std::max(d2 * 0.5, 0.0))};
      axis.x = R(0, 2) / (2.0 * axis.z);
      axis.y = R(1, 2) / (2.0 * axis.z);
    }
    axis = normalized3(axis);
    // Sign of the axis from the antisymmetric part when available.
    if (dot3(axis, w) < 0) axis = axis * -1.0;
    return axis * theta;
  }
  return w * (theta / (2.0 * std::sin(theta)));
}

PoseParam canonicalize(const PoseParam& p) {
  PoseParam q = p;
  double theta = norm3(q.phi);
  if (theta >= M_PI) {
    double wrapped = std::fmod(theta + M_PI, 2.0 * M_PI) - M_PI;
    q.phi = q.phi * (wrapped / theta);
  }
  return q;
}

Ray camera_ray(const PoseParam& p, const Intrinsics& K, double u, double v) {
  RigidTransform T = pose_to_transform(p);
  Mat3 Rt = transposed(T.R);
  Vec3 dc = pixel_dir_cam(K, u, v);
  return Ray{camera_center(T), matvec(Rt, dc)};
}

PointCloud backproject(const DepthMap& depth, const Intrinsics& K,
                       std::span<const std::pair<int, int>> pixels) {
  PointCloud cloud;
  cloud.frame = CloudFrame::kCamera;
  cloud.points.reserve(pixels.size());
  cloud.pixels.reserve(pixels.size());
  for (auto [u, v] : pixels) {
    double d = depth.at(u, v);
    if (d <= 0.0) throw NonPositiveDepth("depth <= 0 at sampled pixel");
    cloud.points.push_back(backproject_pixel(K, double(u), double(v), d));
    cloud.pixels.emplace_back(u, v);
  }
  return cloud;
}

Projection project(const PointCloud& cloud, const Intrinsics& K) {
  Projection out;
  out.uv.reserve(cloud.points.size());
  out.visible.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    if (p.z <= kProjectZMin) {
      out.uv.emplace_back(0.0, 0.0);
      out.visible.push_back(false);
      continue;
    }
    double u = K.fx * p.x / p.z + K.cx - 0.5;
    double v = K.fy * p.y / p.z + K.cy - 0.5;
    bool vis = u >= 0.0 && u <= K.width - 1.0 && v >= 0.0 && v <= K.height - 1.0;
    out.uv.emplace_back(u, v);
    out.visible.push_back(vis);
  }
  return out;
}

TransformVar pose_to_transform_var(const PoseVars& p) {
  return TransformVar{exp_so3_t(p.phi), p.t};
}

TransformVar relative_pose_var(const TransformVar& Ti, const TransformVar& Tj) {
  Mat3T<Var> R = matmul(Tj.R, transposed(Ti.R));
  Vec3T<Var> Rti = matvec(R, Ti.t);
  return TransformVar{R, Tj.t - Rti};
}

RayVars camera_ray_var(const PoseVars& p, const Intrinsics& K, double u,
                       double v) {
  Mat3T<Var> R = exp_so3_t(p.phi);
  Mat3T<Var> Rt = transposed(R);
  Vec3 dc = pixel_dir_cam(K, u, v);
  Vec3T<Var> dir{Rt.m[0] * dc.x + Rt.m[1] * dc.y + Rt.m[2] * dc.z,
                 Rt.m[3] * dc.x + Rt.m[4] * dc.y + Rt.m[5] * dc.z,
                 Rt.m[6] * dc.x + Rt.m[7] * dc.y + Rt.m[8] * dc.z};
  Vec3T<Var> origin = matvec(Rt, p.t) * (-1.0);
  return RayVars{origin, dir};
}

}  // namespace npnf
