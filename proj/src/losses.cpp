#include "npnf/losses.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>

namespace npnf {

namespace {

// exact nearest neighbor in `to` for every point of `from`; ties keep the
// first index
std::vector<uint32_t> nearest_indices(std::span<const Vec3> from,
                                      std::span<const Vec3> to) {
  std::vector<uint32_t> nn(from.size(), 0);
  int64_t n = int64_t(from.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    uint32_t best_j = 0;
    for (size_t j = 0; j < to.size(); ++j) {
      Vec3 d = from[i] - to[j];
      double d2 = dot3(d, d);
      if (d2 < best) {
        best = d2;
        best_j = uint32_t(j);
      }
    }
    nn[i] = best_j;
  }
  return nn;
}

struct CellIndex {
  int iu, iv;
};

CellIndex bilinear_cell(const Image& img, double u, double v) {
  int iu = int(std::ceil(u)) - 1;
  int iv = int(std::ceil(v)) - 1;
  iu = std::clamp(iu, 0, img.width - 2);
  iv = std::clamp(iv, 0, img.height - 2);
  return {iu, iv};
}

}  // namespace

Vec3 bilinear_sample(const Image& img, double u, double v) {
  u = std::clamp(u, 0.0, double(img.width - 1));
  v = std::clamp(v, 0.0, double(img.height - 1));
  auto [iu, iv] = bilinear_cell(img, u, v);
  double fu = u - iu, fv = v - iv;
  const double* c00 = img.pixel(iu, iv);
  const double* c10 = img.pixel(iu + 1, iv);
  const double* c01 = img.pixel(iu, iv + 1);
  const double* c11 = img.pixel(iu + 1, iv + 1);
  Vec3 out;
  double* o = &out.x;
  for (int ch = 0; ch < 3; ++ch) {
    o[ch] = (1 - fu) * (1 - fv) * c00[ch] + fu * (1 - fv) * c10[ch] +
            (1 - fu) * fv * c01[ch] + fu * fv * c11[ch];
  }
  return out;
}

double loss_rgb(std::span<const Vec3> rendered, std::span<const Vec3> target) {
  double s = 0.0;
  for (size_t i = 0; i < rendered.size(); ++i) {
    Vec3 d = rendered[i] - target[i];
    s += d.x * d.x + d.y * d.y + d.z * d.z;
  }
  return s / (3.0 * double(rendered.size()));
}

double loss_depth(std::span<const double> undistorted,
                  std::span<const double> rendered) {
  double s = 0.0;
  for (size_t i = 0; i < undistorted.size(); ++i)
    s += std::fabs(undistorted[i] - rendered[i]);
  return s / double(undistorted.size());
}

double chamfer(const PointCloud& pi, const PointCloud& pj) {
  auto nn_ij = nearest_indices(pi.points, pj.points);
  auto nn_ji = nearest_indices(pj.points, pi.points);
  double a = 0.0, b = 0.0;
  for (size_t i = 0; i < pi.points.size(); ++i)
    a += norm3(pi.points[i] - pj.points[nn_ij[i]]);
  for (size_t j = 0; j < pj.points.size(); ++j)
    b += norm3(pj.points[j] - pi.points[nn_ji[j]]);
  return a / double(pi.points.size()) + b / double(pj.points.size());
}

double loss_pc_pair(const PointCloud& cloud_i, const PointCloud& cloud_j,
                    const RigidTransform& Ti, const RigidTransform& Tj) {
  RigidTransform Tji = relative_pose(Ti, Tj);
  PointCloud moved = cloud_i;
  for (Vec3& p : moved.points) p = apply_transform(Tji, p);
  NormalizedPair np = normalize_pair(moved, cloud_j);
  return chamfer(np.pj, np.pi);
}

double loss_rgb_surface_pair(const PointCloud& cloud_i,
                             const RigidTransform& Ti,
                             const RigidTransform& Tj, const Image& img_i,
                             const Image& img_j, const Intrinsics& K) {
  RigidTransform Tji = relative_pose(Ti, Tj);
  PointCloud moved = cloud_i;
  for (Vec3& p : moved.points) p = apply_transform(Tji, p);
  Projection pri = project(cloud_i, K);
  Projection prj = project(moved, K);
  double s = 0.0;
  size_t n = 0;
  for (size_t k = 0; k < cloud_i.points.size(); ++k) {
    if (!pri.visible[k] || !prj.visible[k]) continue;
    Vec3 ci = bilinear_sample(img_i, pri.uv[k].first, pri.uv[k].second);
    Vec3 cj = bilinear_sample(img_j, prj.uv[k].first, prj.uv[k].second);
    s += std::fabs(ci.x - cj.x) + std::fabs(ci.y - cj.y) +
         std::fabs(ci.z - cj.z);
    ++n;
  }
  if (n == 0) throw NoVisibleOverlap("no point visible in both frames");
  return s / (3.0 * double(n));
}

StepSample make_step_sample(const TrainDataset& data, int frame,
                            size_t rays_per_image, size_t cloud_points,
                            const RenderConfig& rcfg,
                            std::span<const DistortionParam> dists, Rng& rng) {
  StepSample s;
  s.frame = frame;
  const Intrinsics& K = data.K;
  auto idx = rng.sample_without_replacement(uint32_t(K.width * K.height),
                                            uint32_t(rays_per_image));
  for (uint32_t p : idx)
    s.ray_pixels.emplace_back(int(p % K.width), int(p / K.width));
  s.ray_hs.reserve(s.ray_pixels.size());
  for (size_t r = 0; r < s.ray_pixels.size(); ++r)
    s.ray_hs.push_back(sample_along_ray(rcfg, rng));
  s.has_pair = frame + 1 < int(data.frame_count());
  if (s.has_pair) {
    s.cloud_pixels_i =
        build_cloud(data.pseudo_depth[frame], dists[frame], K, cloud_points, rng)
            .pixels;
    s.cloud_pixels_j = build_cloud(data.pseudo_depth[frame + 1],
                                   dists[frame + 1], K, cloud_points, rng)
                           .pixels;
  }
  return s;
}

namespace {

struct PoseLeaves {
  PoseVars vars;
  uint32_t base;  // 6 consecutive leaves: phi, t
};

PoseLeaves load_pose(Tape& tape, const PoseParam& p) {
  double flat[6] = {p.phi.x, p.phi.y, p.phi.z, p.t.x, p.t.y, p.t.z};
  uint32_t base = tape.leaf_block(flat);
  PoseVars pv{{Var{&tape, base}, Var{&tape, base + 1}, Var{&tape, base + 2}},
              {Var{&tape, base + 3}, Var{&tape, base + 4}, Var{&tape, base + 5}}};
  return {pv, base};
}

struct DistLeaves {
  DistortionVars vars;
  uint32_t base;
};

DistLeaves load_dist(Tape& tape, const DistortionParam& d) {
  double flat[2] = {d.alpha, d.beta};
  uint32_t base = tape.leaf_block(flat);
  return {{Var{&tape, base}, Var{&tape, base + 1}}, base};
}

void add_block_grads(const Tape& tape, uint32_t base, size_t n, double* out) {
  for (size_t k = 0; k < n; ++k) out[k] += tape.grad(base + uint32_t(k));
}

void add_to(double* dst, const double* src, size_t n) {
  for (size_t k = 0; k < n; ++k) dst[k] += src[k];
}

Var mean_or_zero(Tape& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return tape.constant(0.0);
  Var s = terms[0];
  for (size_t k = 1; k < terms.size(); ++k) s = s + terms[k];
  return s / double(terms.size());
}

Vec3T<Var> bilinear_sample_var(const Image& img, Var u, Var v) {
  auto [iu, iv] = bilinear_cell(img, u.val(), v.val());
  Var fu = u - double(iu);
  Var fv = v - double(iv);
  const double* c00 = img.pixel(iu, iv);
  const double* c10 = img.pixel(iu + 1, iv);
  const double* c01 = img.pixel(iu, iv + 1);
  const double* c11 = img.pixel(iu + 1, iv + 1);
  Var w11 = fu * fv;
  Var w10 = fu - w11;        // fu * (1 - fv)
  Var w01 = fv - w11;        // (1 - fu) * fv
  Var w00 = 1.0 - fu - w01;  // (1 - fu) * (1 - fv)
  Vec3T<Var> out;
  Var* o[3] = {&out.x, &out.y, &out.z};
  for (int ch = 0; ch < 3; ++ch) {
    *o[ch] = w00 * c00[ch] + w10 * c10[ch] + w01 * c01[ch] + w11 * c11[ch];
  }
  return out;
}

Var point_distance(Tape& tape, const Vec3T<Var>& a, const Vec3T<Var>& b) {
  Var dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  Var d2 = dx * dx + dy * dy + dz * dz;
  if (d2.val() < 1e-300) return tape.constant(0.0);
  return sqrt(d2);
}

// chamfer on the tape with the matching fixed from current values
Var chamfer_var(Tape& tape, const std::vector<Vec3T<Var>>& a,
                const std::vector<Vec3T<Var>>& b) {
  std::vector<Vec3> av(a.size()), bv(b.size());
  for (size_t k = 0; k < a.size(); ++k)
    av[k] = {a[k].x.val(), a[k].y.val(), a[k].z.val()};
  for (size_t k = 0; k < b.size(); ++k)
    bv[k] = {b[k].x.val(), b[k].y.val(), b[k].z.val()};
  auto nn_ab = nearest_indices(av, bv);
  auto nn_ba = nearest_indices(bv, av);
  std::vector<Var> da, db;
  da.reserve(a.size());
  db.reserve(b.size());
  for (size_t k = 0; k < a.size(); ++k)
    da.push_back(point_distance(tape, a[k], b[nn_ab[k]]));
  for (size_t k = 0; k < b.size(); ++k)
    db.push_back(point_distance(tape, b[k], a[nn_ba[k]]));
  return mean_or_zero(tape, da) + mean_or_zero(tape, db);
}

struct ChunkResult {
  double rgb_sum = 0.0;    // summed squared error
  double depth_sum = 0.0;  // summed absolute error
  std::vector<double> theta_grad;
  double pose_grad[6] = {};
  double dist_grad[2] = {};
};

}  // namespace

LossReport total_loss(const TrainDataset& data, const FieldParamRef& theta,
                      std::span<const PoseParam> poses,
                      std::span<const DistortionParam> dists,
                      const LossWeights& weights, const RenderConfig& rcfg,
                      const StepSample& sample, Gradients* grads,
                      const PairLock* lock) {
  LossReport report;
  const Intrinsics& K = data.K;
  const int i = sample.frame;
  const size_t n_rays = sample.ray_pixels.size();
  const size_t n_theta = theta.values.size();

  // --- photometric + depth terms, chunked over rays ---
  const size_t chunk_rays = 64;
  const size_t n_chunks = (n_rays + chunk_rays - 1) / chunk_rays;
  std::vector<ChunkResult> chunks(n_chunks);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int64_t c = 0; c < int64_t(n_chunks); ++c) {  // no-op when rays are off
    ChunkResult& res = chunks[c];
    // reused per thread: keeps node storage allocated between steps
    static thread_local Tape tape;
    tape.clear();
    uint32_t theta_base = tape.leaf_block(theta.values);
    PoseLeaves pose = load_pose(tape, poses[i]);
    DistLeaves dist = load_dist(tape, dists[i]);
    std::vector<Var> rgb_terms, depth_terms;
    size_t lo = c * chunk_rays, hi = std::min(n_rays, lo + chunk_rays);
    for (size_t r = lo; r < hi; ++r) {
      auto [u, v] = sample.ray_pixels[r];
      RayVars ray = camera_ray_var(pose.vars, K, u, v);
      RayRenderVar rr = render_ray_var(tape, *theta.config, theta_base, ray,
                                       sample.ray_hs[r], rcfg.h_far);
      const double* target = data.images[i].pixel(u, v);
      Var ex = rr.color.x - target[0];
      Var ey = rr.color.y - target[1];
      Var ez = rr.color.z - target[2];
      rgb_terms.push_back(ex * ex + ey * ey + ez * ez);
      Var dstar = dist.vars.alpha * data.pseudo_depth[i].at(u, v) +
                  dist.vars.beta;
      // rendered ray distance -> z-depth, matching the depth-map convention
      double dz = pixel_dir_cam(K, u, v).z;
      depth_terms.push_back(abs(dstar - rr.depth * dz));
    }
    Var rgb_sum = rgb_terms[0];
    for (size_t k = 1; k < rgb_terms.size(); ++k) rgb_sum = rgb_sum + rgb_terms[k];
    Var depth_sum = depth_terms[0];
    for (size_t k = 1; k < depth_terms.size(); ++k)
      depth_sum = depth_sum + depth_terms[k];
    res.rgb_sum = rgb_sum.val();
    res.depth_sum = depth_sum.val();
    if (grads) {
      Var root = rgb_sum * (1.0 / (3.0 * double(n_rays))) +
                 depth_sum * (weights.lambda1 / double(n_rays));
      tape.backward(root);
      res.theta_grad.assign(n_theta, 0.0);
      add_block_grads(tape, theta_base, n_theta, res.theta_grad.data());
      add_block_grads(tape, pose.base, 6, res.pose_grad);
      add_block_grads(tape, dist.base, 2, res.dist_grad);
    }
  }

  double rgb_total = 0.0, depth_total = 0.0;
  for (size_t c = 0; c < n_chunks; ++c) {
    rgb_total += chunks[c].rgb_sum;
    depth_total += chunks[c].depth_sum;
    if (grads) {
      for (size_t k = 0; k < n_theta; ++k)
        grads->theta[k] += chunks[c].theta_grad[k];
      add_to(grads->poses.data() + 6 * i, chunks[c].pose_grad, 6);
      add_to(grads->dists.data() + 2 * i, chunks[c].dist_grad, 2);
    }
  }
  if (n_rays > 0) {
    report.l_rgb = rgb_total / (3.0 * double(n_rays));
    report.l_depth = depth_total / double(n_rays);
  }
  report.n_rgb = report.n_depth = n_rays;

  // --- inter-frame terms on one tape ---
  if (sample.has_pair) {
    const int j = i + 1;
    static thread_local Tape tape;
    tape.clear();
    PoseLeaves pi_l = load_pose(tape, poses[i]);
    PoseLeaves pj_l = load_pose(tape, poses[j]);
    DistLeaves di_l = load_dist(tape, dists[i]);
    DistLeaves dj_l = load_dist(tape, dists[j]);

    TransformVar Ti = pose_to_transform_var(pi_l.vars);
    TransformVar Tj = pose_to_transform_var(pj_l.vars);
    TransformVar Tji = relative_pose_var(Ti, Tj);

    CloudVars ci = build_cloud_var(tape, data.pseudo_depth[i], di_l.vars, K,
                                   sample.cloud_pixels_i);
    CloudVars cj = build_cloud_var(tape, data.pseudo_depth[j], dj_l.vars, K,
                                   sample.cloud_pixels_j);
    std::vector<Vec3T<Var>> moved(ci.points.size());
    for (size_t k = 0; k < ci.points.size(); ++k)
      moved[k] = apply_transform_var(Tji, ci.points[k]);

    // point cloud term on clouds normalized by the (detached) scale of Pj
    double s = 0.0;
    if (lock && lock->scale > 0.0) {
      s = lock->scale;
    } else {
      for (const auto& p : cj.points)
        s += std::sqrt(p.x.val() * p.x.val() + p.y.val() * p.y.val() +
                       p.z.val() * p.z.val());
      s /= double(cj.points.size());
    }
    if (s < 1e-9) throw DegenerateCloud("cloud scale below 1e-9");
    report.pair_scale = s;
    double inv_s = 1.0 / s;
    std::vector<Vec3T<Var>> moved_n(moved.size()), cj_n(cj.points.size());
    for (size_t k = 0; k < moved.size(); ++k)
      moved_n[k] = moved[k] * inv_s;
    for (size_t k = 0; k < cj.points.size(); ++k)
      cj_n[k] = cj.points[k] * inv_s;
    Var l_pc = chamfer_var(tape, cj_n, moved_n);

    // surface photometric term on the unnormalized clouds
    std::vector<Var> rgbs_terms;
    report.rgbs_mask.assign(ci.points.size(), 0);
    for (size_t k = 0; k < ci.points.size(); ++k) {
      const Vec3T<Var>& p_i = ci.points[k];
      const Vec3T<Var>& p_j = moved[k];
      if (lock && !lock->rgbs_mask.empty()) {
        if (!lock->rgbs_mask[k]) continue;
      } else {
        if (p_i.z.val() <= kProjectZMin || p_j.z.val() <= kProjectZMin)
          continue;
        auto inside = [&](double u, double v) {
          return u >= 0.0 && u <= K.width - 1.0 && v >= 0.0 &&
                 v <= K.height - 1.0;
        };
        double ui0 = (p_i.x.val() / p_i.z.val()) * K.fx + (K.cx - 0.5);
        double vi0 = (p_i.y.val() / p_i.z.val()) * K.fy + (K.cy - 0.5);
        double uj0 = (p_j.x.val() / p_j.z.val()) * K.fx + (K.cx - 0.5);
        double vj0 = (p_j.y.val() / p_j.z.val()) * K.fy + (K.cy - 0.5);
        if (!inside(ui0, vi0) || !inside(uj0, vj0)) continue;
      }
      report.rgbs_mask[k] = 1;
      Var ui = (p_i.x / p_i.z) * K.fx + (K.cx - 0.5);
      Var vi = (p_i.y / p_i.z) * K.fy + (K.cy - 0.5);
      Var uj = (p_j.x / p_j.z) * K.fx + (K.cx - 0.5);
      Var vj = (p_j.y / p_j.z) * K.fy + (K.cy - 0.5);
      Vec3T<Var> color_i = bilinear_sample_var(data.images[i], ui, vi);
      Vec3T<Var> color_j = bilinear_sample_var(data.images[j], uj, vj);
      rgbs_terms.push_back(
          (abs(color_i.x - color_j.x) + abs(color_i.y - color_j.y) +
           abs(color_i.z - color_j.z)) *
          (1.0 / 3.0));
    }
    Var l_rgbs = mean_or_zero(tape, rgbs_terms);
    if (rgbs_terms.empty()) report.skipped_pairs += 1;

    report.l_pc = l_pc.val();
    report.l_rgbs = l_rgbs.val();
    report.n_pc = sample.cloud_pixels_i.size() + sample.cloud_pixels_j.size();
    report.n_rgbs = rgbs_terms.size();

    if (grads) {
      Var root = l_pc * weights.lambda2 + l_rgbs * weights.lambda3;
      tape.backward(root);
      add_block_grads(tape, pi_l.base, 6, grads->poses.data() + 6 * i);
      add_block_grads(tape, pj_l.base, 6, grads->poses.data() + 6 * j);
      add_block_grads(tape, di_l.base, 2, grads->dists.data() + 2 * i);
      add_block_grads(tape, dj_l.base, 2, grads->dists.data() + 2 * j);
    }
  }

  report.total = report.l_rgb + weights.lambda1 * report.l_depth +
                 weights.lambda2 * report.l_pc +
                 weights.lambda3 * report.l_rgbs;
  return report;
}

}  // namespace npnf
