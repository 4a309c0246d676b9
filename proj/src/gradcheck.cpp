#include "npnf/gradcheck.hpp"

#include <cmath>
#include <cstdio>

namespace npnf {

GradCheckFixture make_gradcheck_fixture(uint64_t seed) {
  GradCheckFixture fx;
  Intrinsics K{8.0, 8.0, 4.0, 4.0, 8, 8};
  TrajectoryParams tp;
  tp.orbit_radius = 4.0;
  tp.sweep_deg = 20.0;
  Trajectory traj = make_trajectory(TrajectoryKind::kOrbit, 3, tp);
  AnalyticScene scene = default_scene(true);
  DistortionSpec spec = random_distortion(3, 1.0, seed);
  fx.data = make_dataset(scene, traj, K, 256, 0.5, 8.0, spec);

  fx.field = FieldConfig{2, 8, 2, 1};
  fx.theta = init_field(fx.field, seed);
  fx.rcfg = RenderConfig{0.5, 8.0, 8, true, seed};

  // start near (not at) ground truth so every term is active and smooth
  Rng rng(seed + 1);
  fx.poses = traj.poses;
  for (auto& p : fx.poses) {
    p.phi = p.phi + Vec3{rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02),
                         rng.uniform(-0.02, 0.02)};
    p.t = p.t + Vec3{rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                     rng.uniform(-0.05, 0.05)};
  }
  fx.dists.assign(3, DistortionParam{1.0, 0.0});
  for (auto& d : fx.dists) {
    d.alpha = rng.uniform(0.9, 1.1);
    d.beta = rng.uniform(-0.05, 0.05);
  }
  return fx;
}

GradCheckReport run_gradcheck(double tol, double tamper) {
  GradCheckFixture fx = make_gradcheck_fixture();
  const size_t n_theta = fx.theta.values.size();
  const size_t n_frames = fx.data.train.frame_count();
  FieldParamRef theta_ref{&fx.field, fx.theta.values};

  const LossWeights settings[] = {
      {0.0, 0.0, 0.0},  // rgb only
      {1.0, 0.0, 0.0},  // + depth
      {0.0, 1.0, 0.0},  // + point cloud
      {0.0, 0.0, 1.0},  // + surface rgb
      {0.04, 1.0, 1.0}  // paper combination
  };
  const char* names[] = {"rgb", "rgb+depth", "rgb+pc", "rgb+rgbs", "combined"};

  GradCheckReport report;
  report.pass = true;
  const double h = 1e-5;

  for (size_t w = 0; w < 5; ++w) {
    for (int frame = 0; frame < int(n_frames) - 1; ++frame) {
      Rng sample_rng(99 + uint64_t(frame));
      StepSample sample =
          make_step_sample(fx.data.train, frame, fx.rays, fx.cloud_points,
                           fx.rcfg, fx.dists, sample_rng);

      Gradients grads(n_theta, n_frames);
      LossReport base = total_loss(fx.data.train, theta_ref, fx.poses,
                                   fx.dists, settings[w], fx.rcfg, sample,
                                   &grads);
      // FD probes stay on the branch the gradient was computed for: same
      // normalization scale, same set of visible surface samples.
      PairLock lock{base.pair_scale, base.rgbs_mask};
      auto eval = [&]() {
        return total_loss(fx.data.train, theta_ref, fx.poses, fx.dists,
                          settings[w], fx.rcfg, sample, nullptr, &lock)
            .total;
      };
      if (tamper != 0.0) {
        grads.theta[0] += tamper;
        grads.poses[0] += tamper;
        grads.dists[0] += tamper;
      }

      double case_theta = 0.0, case_pose = 0.0, case_dist = 0.0;
      auto check = [&](double* param, double analytic, double& track) {
        double save = *param;
        *param = save + h;
        double fp = eval();
        *param = save - h;
        double fm = eval();
        *param = save;
        double fd = (fp - fm) / (2.0 * h);
        double rel = std::fabs(analytic - fd) /
                     std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
        track = std::max(track, rel);
      };
      for (size_t k = 0; k < n_theta; ++k)
        check(&fx.theta.values[k], grads.theta[k], case_theta);
      for (size_t f = 0; f < n_frames; ++f) {
        double* pp = &fx.poses[f].phi.x;
        for (int k = 0; k < 6; ++k)
          check(pp + k, grads.poses[6 * f + k], case_pose);
        check(&fx.dists[f].alpha, grads.dists[2 * f], case_dist);
        check(&fx.dists[f].beta, grads.dists[2 * f + 1], case_dist);
      }
      report.max_rel_theta = std::max(report.max_rel_theta, case_theta);
      report.max_rel_pose = std::max(report.max_rel_pose, case_pose);
      report.max_rel_dist = std::max(report.max_rel_dist, case_dist);
      char line[160];
      std::snprintf(line, sizeof line,
                    "%-10s frame %d: theta %.3e  pose %.3e  dist %.3e",
                    names[w], frame, case_theta, case_pose, case_dist);
      report.lines.emplace_back(line);
    }
  }
  report.pass = report.max_rel_theta < tol && report.max_rel_pose < tol &&
                report.max_rel_dist < tol;
  return report;
}

}  // namespace npnf
