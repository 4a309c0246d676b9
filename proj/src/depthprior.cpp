#include "npnf/depthprior.hpp"

namespace npnf {

DepthMap undistort(const DepthMap& d, const DistortionParam& psi) {
  DepthMap out = d;
  for (double& v : out.values) v = psi.alpha * v + psi.beta;
  return out;
}

PointCloud build_cloud(const DepthMap& d, const DistortionParam& psi,
                       const Intrinsics& K, size_t n_points, Rng& rng) {
  size_t total = size_t(d.width) * d.height;
  if (n_points > total) n_points = total;
  PointCloud cloud;
  cloud.frame = CloudFrame::kCamera;
  size_t attempts = 0, budget = 4 * n_points;
  std::vector<uint32_t> order =
      rng.sample_without_replacement(uint32_t(total), uint32_t(total));
  for (uint32_t idx : order) {
    if (cloud.points.size() >= n_points || attempts >= budget) break;
    ++attempts;
    int u = int(idx % d.width), v = int(idx / d.width);
    double depth = psi.alpha * d.at(u, v) + psi.beta;
    if (depth <= 0.0) continue;
    cloud.points.push_back(backproject_pixel(K, u, v, depth));
    cloud.pixels.emplace_back(u, v);
  }
  if (cloud.points.size() < n_points)
    throw InsufficientValidDepth("could not fill point budget");
  return cloud;
}

double cloud_scale(const PointCloud& cloud) {
  if (cloud.points.empty()) throw DegenerateCloud("empty cloud");
  double s = 0.0;
  for (const Vec3& p : cloud.points) s += norm3(p);
  s /= double(cloud.points.size());
  if (s < 1e-9) throw DegenerateCloud("cloud scale below 1e-9");
  return s;
}

NormalizedPair normalize_pair(const PointCloud& pi, const PointCloud& pj) {
  double s = cloud_scale(pj);
  NormalizedPair out{pi, pj, s};
  for (Vec3& p : out.pi.points) p = p * (1.0 / s);
  for (Vec3& p : out.pj.points) p = p * (1.0 / s);
  return out;
}

CloudVars build_cloud_var(Tape&, const DepthMap& d,
                          const DistortionVars& psi, const Intrinsics& K,
                          std::span<const std::pair<int, int>> pixels) {
  CloudVars out;
  out.points.reserve(pixels.size());
  for (auto [u, v] : pixels) {
    Var depth = psi.alpha * d.at(u, v) + psi.beta;
    double rx = (u + 0.5 - K.cx) / K.fx;
    double ry = (v + 0.5 - K.cy) / K.fy;
    out.points.push_back({depth * rx, depth * ry, depth});
    out.pixels.emplace_back(u, v);
  }
  return out;
}

}  // namespace npnf
