#include "npnf/eval.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>

namespace npnf {

Sim3 umeyama_sim3(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.size() < 3)
    throw DegenerateConfiguration("need >= 3 point pairs");
  const size_t n = source.size();
  Eigen::Vector3d mx = Eigen::Vector3d::Zero(), my = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    mx += Eigen::Vector3d(source[i].x, source[i].y, source[i].z);
    my += Eigen::Vector3d(target[i].x, target[i].y, target[i].z);
  }
  mx /= double(n);
  my /= double(n);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_x = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Eigen::Vector3d dx = Eigen::Vector3d(source[i].x, source[i].y, source[i].z) - mx;
    Eigen::Vector3d dy = Eigen::Vector3d(target[i].x, target[i].y, target[i].z) - my;
    cov += dy * dx.transpose();
    var_x += dx.squaredNorm();
  }
  cov /= double(n);
  var_x /= double(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = svd.singularValues();
  if (d(1) < 1e-12 * std::max(d(0), 1e-300))
    throw DegenerateConfiguration("collinear point configuration");
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) s(2) = -1;
  Eigen::Matrix3d R =
      svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  double scale = d.dot(s) / var_x;
  Eigen::Vector3d t = my - scale * R * mx;
  Sim3 out;
  out.scale = scale;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.R(r, c) = R(r, c);
  out.t = {t(0), t(1), t(2)};
  return out;
}

namespace {

std::vector<Vec3> camera_centers(std::span<const PoseParam> poses) {
  std::vector<Vec3> centers;
  centers.reserve(poses.size());
  for (const auto& p : poses)
    centers.push_back(camera_center(pose_to_transform(p)));
  return centers;
}

// camera-to-world transform of a pose
RigidTransform c2w(const PoseParam& p) {
  RigidTransform T = pose_to_transform(p);
  return {transposed(T.R), camera_center(T)};
}

RigidTransform compose(const RigidTransform& A, const RigidTransform& B) {
  return {matmul(A.R, B.R), matvec(A.R, B.t) + A.t};
}

double rot_angle(const Mat3& R) {
  double c = std::clamp((R(0, 0) + R(1, 1) + R(2, 2) - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

double ate(std::span<const PoseParam> est, std::span<const PoseParam> gt) {
  if (est.size() != gt.size()) throw DegenerateConfiguration("length mismatch");
  auto ce = camera_centers(est);
  auto cg = camera_centers(gt);
  Sim3 align = umeyama_sim3(ce, cg);
  double se = 0.0;
  for (size_t i = 0; i < ce.size(); ++i) {
    Vec3 r = align.apply(ce[i]) - cg[i];
    se += dot3(r, r);
  }
  return std::sqrt(se / double(ce.size()));
}

std::pair<double, double> rpe(std::span<const PoseParam> est,
                              std::span<const PoseParam> gt, int delta) {
  if (est.size() != gt.size() || est.size() < size_t(delta) + 1)
    throw DegenerateConfiguration("length mismatch");
  Sim3 align = umeyama_sim3(camera_centers(est), camera_centers(gt));
  std::vector<RigidTransform> P, Q;
  for (const auto& p : est) {
    RigidTransform T = c2w(p);
    T.t = T.t * align.scale;  // scale-only pre-correction
    P.push_back(T);
  }
  for (const auto& p : gt) Q.push_back(c2w(p));
  double st = 0.0, sr = 0.0;
  size_t m = est.size() - size_t(delta);
  for (size_t i = 0; i < m; ++i) {
    RigidTransform rel_p = compose(inverse(P[i]), P[i + delta]);
    RigidTransform rel_q = compose(inverse(Q[i]), Q[i + delta]);
    RigidTransform e = compose(inverse(rel_q), rel_p);
    st += dot3(e.t, e.t);
    double a = rot_angle(e.R);
    sr += a * a;
  }
  double rpe_t = std::sqrt(st / double(m));
  double rpe_r = std::sqrt(sr / double(m)) * 180.0 / M_PI;
  return {rpe_t, rpe_r};
}

PoseMetrics pose_metrics(std::span<const PoseParam> est,
                         std::span<const PoseParam> gt) {
  PoseMetrics pm;
  pm.ate_rmse = ate(est, gt);
  std::tie(pm.rpe_t, pm.rpe_r) = rpe(est, gt, 1);
  return pm;
}

DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                           const std::vector<bool>& mask) {
  std::vector<double> ps, gs;
  for (size_t i = 0; i < gt.values.size(); ++i) {
    if (!mask[i]) continue;
    ps.push_back(pred.values[i]);
    gs.push_back(gt.values[i]);
  }
  if (ps.empty()) throw EmptyMask("no valid pixels");
  auto median = [](std::vector<double> v) {
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
  };
  double scale = median(gs) / median(ps);
  DepthMetrics m;
  size_t n = ps.size();
  for (size_t i = 0; i < n; ++i) {
    double d = ps[i] * scale, d_gt = gs[i];
    double diff = std::fabs(d - d_gt);
    m.abs_rel += diff / d_gt;
    m.sq_rel += diff * diff / d_gt;
    m.rmse += diff * diff;
    double dl = std::log(d) - std::log(d_gt);
    m.rmse_log += dl * dl;
    double ratio = std::max(d / d_gt, d_gt / d);
    m.delta1 += ratio < 1.25;
    m.delta2 += ratio < 1.25 * 1.25;
    m.delta3 += ratio < 1.25 * 1.25 * 1.25;
  }
  m.abs_rel /= double(n);
  m.sq_rel /= double(n);
  m.rmse = std::sqrt(m.rmse / double(n));
  m.rmse_log = std::sqrt(m.rmse_log / double(n));
  m.delta1 /= double(n);
  m.delta2 /= double(n);
  m.delta3 /= double(n);
  return m;
}

double psnr(const Image& a, const Image& b) {
  double mse = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    double d = a.rgb[i] - b.rgb[i];
    mse += d * d;
  }
  mse /= double(a.rgb.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  constexpr int kHalf = 5;  // 11x11 window
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  double w[2 * kHalf + 1];
  for (int k = -kHalf; k <= kHalf; ++k)
    w[k + kHalf] = std::exp(-0.5 * k * k / (kSigma * kSigma));

  int width = a.width, height = a.height;
  double total = 0.0;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      for (int ch = 0; ch < 3; ++ch) {
        double sw = 0, mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int dv = -kHalf; dv <= kHalf; ++dv) {
          int vv = v + dv;
          if (vv < 0 || vv >= height) continue;
          for (int du = -kHalf; du <= kHalf; ++du) {
            int uu = u + du;
            if (uu < 0 || uu >= width) continue;
            double wt = w[dv + kHalf] * w[du + kHalf];
            double x = a.pixel(uu, vv)[ch], y = b.pixel(uu, vv)[ch];
            sw += wt;
            mx += wt * x;
            my += wt * y;
            sxx += wt * x * x;
            syy += wt * y * y;
            sxy += wt * x * y;
          }
        }
        mx /= sw;
        my /= sw;
        double vx = sxx / sw - mx * mx;
        double vy = syy / sw - my * my;
        double cxy = sxy / sw - mx * my;
        total += ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
                 ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      }
    }
  }
  return total / (3.0 * double(width) * double(height));
}

namespace {

void write_polyline(std::ofstream& f, const std::vector<Vec3>& pts,
                    const char* color, double x0, double z0, double s,
                    double h) {
  f << "<polyline fill=\"none\" stroke=\"" << color
    << "\" stroke-width=\"2\" points=\"";
  for (const Vec3& p : pts)
    f << (p.x - x0) * s + 20 << "," << h - ((p.z - z0) * s + 20) << " ";
  f << "\"/>\n";
}

}  // namespace

void write_trajectory_svg(const std::filesystem::path& path,
                          std::span<const PoseParam> est,
                          std::span<const PoseParam> gt) {
  auto ce = camera_centers(est);
  auto cg = camera_centers(gt);
  Sim3 align = umeyama_sim3(ce, cg);
  for (Vec3& c : ce) c = align.apply(c);
  double xmin = 1e30, xmax = -1e30, zmin = 1e30, zmax = -1e30;
  for (const auto& pts : {ce, cg}) {
    for (const Vec3& p : pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      zmin = std::min(zmin, p.z);
      zmax = std::max(zmax, p.z);
    }
  }
  double span = std::max({xmax - xmin, zmax - zmin, 1e-6});
  double s = 360.0 / span, h = 400.0;
  std::ofstream f(path);
  if (!f) throw IoError("cannot write svg: " + path.string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" "
       "height=\"400\">\n";
  write_polyline(f, cg, "#202020", xmin, zmin, s, h);
  write_polyline(f, ce, "#d03030", xmin, zmin, s, h);
  f << "<text x=\"10\" y=\"15\" font-size=\"12\">gt (black) vs est (red), "
       "x-z view</text>\n</svg>\n";
}

void write_rpe_svg(const std::filesystem::path& path,
                   std::span<const double> rpe_r_deg) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write svg: " + path.string());
  double vmax = 1e-9;
  for (double v : rpe_r_deg) vmax = std::max(vmax, v);
  double w = std::max<size_t>(rpe_r_deg.size(), 1) * 20.0 + 40;
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
    << "\" height=\"220\">\n";
  for (size_t i = 0; i < rpe_r_deg.size(); ++i) {
    double bh = 180.0 * rpe_r_deg[i] / vmax;
    f << "<rect x=\"" << 20 + 20 * i << "\" y=\"" << 200 - bh
      << "\" width=\"16\" height=\"" << bh << "\" fill=\"#4060c0\"/>\n";
  }
  f << "<text x=\"10\" y=\"15\" font-size=\"12\">per-pair rotation error "
       "(deg), max "
    << vmax << "</text>\n</svg>\n";
}

}  // namespace npnf
