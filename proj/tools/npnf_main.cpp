// Command-line front end: synth / train / eval / render / gradcheck.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "npnf/eval.hpp"
#include "npnf/gradcheck.hpp"
#include "npnf/io.hpp"
#include "npnf/synth.hpp"
#include "npnf/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace npnf;

namespace {

// Flat key/value training options. Resolution order: built-in defaults,
// then the --config file, then explicit command-line flags.
struct TrainOpts {
  TrainConfig cfg;
  int checkpoint_every = 100;
  int holdout_every = 0;  // 0 trains on every frame
  std::string resume;
};

void apply_config_file(const std::string& path, TrainOpts& o) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j = json::parse(in);
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get("rays_per_image", o.cfg.rays_per_image);
  get("samples_per_ray", o.cfg.samples_per_ray);
  get("h_near", o.cfg.h_near);
  get("h_far", o.cfg.h_far);
  get("lr_nerf", o.cfg.lr_nerf);
  get("lr_pose_dist", o.cfg.lr_pose_dist);
  get("phase1_epochs", o.cfg.phase1_epochs);
  get("phase2_epochs", o.cfg.phase2_epochs);
  get("nerf_lr_decay", o.cfg.nerf_lr_decay);
  get("pose_lr_decay", o.cfg.pose_lr_decay);
  get("interframe_weight_decay", o.cfg.interframe_weight_decay);
  get("cloud_points", o.cfg.cloud_points);
  get("seed", o.cfg.seed);
  get("freeze_distortion", o.cfg.freeze_distortion);
  get("plateau_phase1", o.cfg.plateau_phase1);
  get("hidden_layers", o.cfg.field.hidden_layers);
  get("hidden_width", o.cfg.field.hidden_width);
  get("freqs_x", o.cfg.field.freqs_x);
  get("freqs_d", o.cfg.field.freqs_d);
  get("lambda_depth", o.cfg.weights.lambda1);
  get("lambda_pc", o.cfg.weights.lambda2);
  get("lambda_surface", o.cfg.weights.lambda3);
  get("checkpoint_every", o.checkpoint_every);
  get("holdout_every", o.holdout_every);
}

std::vector<size_t> train_indices(size_t n, int holdout_every) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < n; ++i) {
    if (holdout_every > 0 && i % size_t(holdout_every) == 0 && n > 2) continue;
    idx.push_back(i);
  }
  return idx;
}

TrainDataset subset(const TrainDataset& d, const std::vector<size_t>& idx) {
  TrainDataset out;
  out.K = d.K;
  for (size_t i : idx) {
    out.images.push_back(d.images[i]);
    out.pseudo_depth.push_back(d.pseudo_depth[i]);
  }
  return out;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              const TrainOpts& o) {
  LoadedDataset data = load_dataset(data_dir);
  std::vector<size_t> tidx =
      train_indices(data.train.frame_count(), o.holdout_every);
  TrainDataset train = subset(data.train, tidx);

  fs::create_directories(out_dir);
  fs::path ckpt = fs::path(out_dir) / "checkpoint.npnf";
  fs::path csv = fs::path(out_dir) / "metrics.csv";

  TrainState state;
  if (!o.resume.empty()) {
    state = load_checkpoint(o.resume);
    if (state.poses.size() != train.frame_count())
      throw IoError("resume checkpoint frame count mismatch");
  } else {
    state = init_state(train, o.cfg);
  }

  uint64_t start_epoch = state.epoch;
  auto on_epoch = [&](uint64_t epoch, const LossReport& r, double lr_n,
                      double lr_p) {
    append_metrics_csv(csv, epoch, r, lr_n, lr_p);
    if (o.checkpoint_every > 0 && epoch % uint64_t(o.checkpoint_every) == 0)
      save_checkpoint(ckpt, state);
    if (epoch % 10 == 0 || epoch == start_epoch + 1)
      std::cout << "epoch " << epoch << " total " << r.total << " rgb "
                << r.l_rgb << " depth " << r.l_depth << " pc " << r.l_pc
                << " rgbs " << r.l_rgbs << "\n";
  };
  run_schedule(state, train, o.cfg, on_epoch);
  save_checkpoint(ckpt, state);
  write_trajectory(fs::path(out_dir) / "trajectory_est.txt", state.poses);

  if (!data.gt_poses.empty()) {
    std::vector<PoseParam> gt;
    for (size_t i : tidx) gt.push_back(data.gt_poses[i]);
    PoseMetrics pm = pose_metrics(state.poses, gt);
    std::cout << "ate_rmse " << pm.ate_rmse << " rpe_t " << pm.rpe_t
              << " rpe_r_deg " << pm.rpe_r << "\n";
    write_trajectory_svg(fs::path(out_dir) / "trajectory.svg", state.poses,
                         gt);
  }
  std::cout << "checkpoint " << ckpt.string() << "\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, int frames, int width, int height,
              const std::string& traj, double sweep_deg, double orbit_radius,
              const std::string& distortion, uint64_t seed, int quad,
              bool textured, const std::string& scene_name, double h_near,
              double h_far) {
  Intrinsics K;
  K.width = width;
  K.height = height;
  K.fx = K.fy = 0.9 * width;
  K.cx = width / 2.0;
  K.cy = height / 2.0;

  TrajectoryKind kind = TrajectoryKind::kOrbit;
  if (traj == "forward") kind = TrajectoryKind::kForward;
  else if (traj == "arc") kind = TrajectoryKind::kArc;
  else if (traj != "orbit") throw CLI::ValidationError("unknown trajectory");

  TrajectoryParams tp;
  tp.sweep_deg = sweep_deg;
  tp.orbit_radius = orbit_radius;
  tp.seed = seed;
  Trajectory trajectory = make_trajectory(kind, frames, tp);

  AnalyticScene scene =
      scene_name == "walled" ? walled_scene(textured) : default_scene(textured);
  DistortionSpec spec = distortion == "random"
                            ? random_distortion(frames, 2.0, seed + 1)
                            : identity_distortion(frames);
  SynthDataset data =
      make_dataset(scene, trajectory, K, quad, h_near, h_far, spec);
  save_synth_dataset(out_dir, data, seed);
  std::cout << "wrote " << frames << " frames to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& ckpt_path,
             const std::string& out_dir, bool nvs, int holdout_every,
             int reg_steps, size_t reg_rays) {
  LoadedDataset data = load_dataset(data_dir);
  TrainState state = load_checkpoint(ckpt_path);
  fs::create_directories(out_dir);
  json report;

  std::vector<size_t> tidx =
      train_indices(data.train.frame_count(), nvs ? holdout_every : 0);
  if (state.poses.size() != tidx.size())
    throw IoError("checkpoint does not match dataset/holdout layout");

  if (!data.gt_poses.empty()) {
    std::vector<PoseParam> gt;
    for (size_t i : tidx) gt.push_back(data.gt_poses[i]);
    PoseMetrics pm = pose_metrics(state.poses, gt);
    report["ate_rmse"] = pm.ate_rmse;
    report["rpe_t"] = pm.rpe_t;
    report["rpe_r_deg"] = pm.rpe_r;
    write_trajectory_svg(fs::path(out_dir) / "trajectory.svg", state.poses,
                         gt);
    std::cout << "ate_rmse " << pm.ate_rmse << " rpe_t " << pm.rpe_t
              << " rpe_r_deg " << pm.rpe_r << "\n";
  }

  RenderConfig rcfg{0.1, 10.0, 128, false, state.rng.state()[0]};
  if (!data.gt_depth.empty()) {
    // depth quality on the first training frame
    size_t f0 = tidx.front();
    const Intrinsics& K = data.train.K;
    Image img(K.width, K.height);
    DepthMap dep(K.width, K.height);
    auto px = all_pixels(K.width, K.height);
    render_image(state.theta, state.poses[0], K, rcfg, px, img, dep);
    std::vector<bool> mask(dep.values.size(), true);
    DepthMetrics dm = depth_metrics(dep, data.gt_depth[f0], mask);
    report["depth_abs_rel"] = dm.abs_rel;
    report["depth_rmse"] = dm.rmse;
    report["depth_delta1"] = dm.delta1;
    std::cout << "depth_abs_rel " << dm.abs_rel << " rmse " << dm.rmse
              << " delta1 " << dm.delta1 << "\n";
  }

  if (nvs) {
    // Held-out frames: initialize from the nearest trained neighbour,
    // refine photometrically against the frozen field, then score.
    double sum_psnr = 0, sum_ssim = 0;
    int count = 0;
    for (size_t i = 0; i < data.train.frame_count(); ++i) {
      if (std::find(tidx.begin(), tidx.end(), i) != tidx.end()) continue;
      size_t nb_data = nearest_train_frame(i, tidx);
      size_t nb_local =
          size_t(std::find(tidx.begin(), tidx.end(), nb_data) - tidx.begin());
      PoseParam pose = register_test_pose(
          state.theta, data.train.images[i], data.train.K,
          state.poses[nb_local], reg_steps, 0.001, rcfg, reg_rays,
          state.rng.state()[1] + i);
      const Intrinsics& K = data.train.K;
      Image img(K.width, K.height);
      DepthMap dep(K.width, K.height);
      auto px = all_pixels(K.width, K.height);
      render_image(state.theta, pose, K, rcfg, px, img, dep);
      double p = psnr(img, data.train.images[i]);
      double s = ssim(img, data.train.images[i]);
      sum_psnr += p;
      sum_ssim += s;
      ++count;
      write_ppm(fs::path(out_dir) / ("nvs_" + std::to_string(i) + ".ppm"),
                img);
      std::cout << "nvs frame " << i << " psnr " << p << " ssim " << s << "\n";
    }
    if (count > 0) {
      report["nvs_psnr"] = sum_psnr / count;
      report["nvs_ssim"] = sum_ssim / count;
      std::cout << "nvs_psnr " << sum_psnr / count << " nvs_ssim "
                << sum_ssim / count << "\n";
    }
  }

  std::ofstream out(fs::path(out_dir) / "report.json");
  out << report.dump(2) << "\n";
  return 0;
}

int cmd_render(const std::string& data_dir, const std::string& ckpt_path,
               int frame, const std::string& out_img,
               const std::string& out_depth, int samples) {
  LoadedDataset data = load_dataset(data_dir);
  TrainState state = load_checkpoint(ckpt_path);
  if (frame < 0 || size_t(frame) >= state.poses.size())
    throw IoError("frame index out of range");
  const Intrinsics& K = data.train.K;
  RenderConfig rcfg{0.1, 10.0, samples, false, 0};
  Image img(K.width, K.height);
  DepthMap dep(K.width, K.height);
  auto px = all_pixels(K.width, K.height);
  render_image(state.theta, state.poses[frame], K, rcfg, px, img, dep);
  write_ppm(out_img, img);
  if (!out_depth.empty()) write_pfm(out_depth, dep);
  std::cout << "wrote " << out_img << "\n";
  return 0;
}

int cmd_gradcheck(double tol) {
  GradCheckReport r = run_gradcheck(tol);
  for (const auto& line : r.lines) std::cout << line << "\n";
  std::cout << "max_rel theta " << r.max_rel_theta << " pose "
            << r.max_rel_pose << " dist " << r.max_rel_dist << "\n";
  std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint pose / depth-distortion / radiance-field trainer"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string s_out, s_traj = "orbit", s_dist = "identity", s_scene = "default";
  int s_frames = 5, s_w = 48, s_h = 48, s_quad = 1024;
  double s_sweep = 30.0, s_radius = 4.0, s_near = 0.1, s_far = 10.0;
  uint64_t s_seed = 0;
  bool s_textured = true;
  synth->add_option("--out", s_out)->required();
  synth->add_option("--frames", s_frames);
  synth->add_option("--width", s_w);
  synth->add_option("--height", s_h);
  synth->add_option("--trajectory", s_traj)
      ->check(CLI::IsMember({"orbit", "forward", "arc"}));
  synth->add_option("--sweep-deg", s_sweep);
  synth->add_option("--orbit-radius", s_radius);
  synth->add_option("--distortion", s_dist)
      ->check(CLI::IsMember({"identity", "random"}));
  synth->add_option("--seed", s_seed);
  synth->add_option("--quad", s_quad, "oracle quadrature samples per ray");
  synth->add_option("--scene", s_scene,
                    "walled adds a backdrop wall so every ray hits geometry "
                    "(use with --far 12)")
      ->check(CLI::IsMember({"default", "walled"}));
  synth->add_option("--near", s_near);
  synth->add_option("--far", s_far);
  synth->add_flag("--textured,!--no-textured", s_textured);

  // train
  auto* train = app.add_subcommand("train", "optimize field, poses and depth "
                                            "distortion on a dataset");
  std::string t_data, t_out, t_config;
  TrainOpts opts;
  train->add_option("--data", t_data)->required();
  train->add_option("--out", t_out)->required();
  train->add_option("--config", t_config, "JSON config file");
  auto* o_rays = train->add_option("--rays", opts.cfg.rays_per_image);
  auto* o_samples = train->add_option("--samples", opts.cfg.samples_per_ray);
  auto* o_lrn = train->add_option("--lr-nerf", opts.cfg.lr_nerf);
  auto* o_lrp = train->add_option("--lr-pose", opts.cfg.lr_pose_dist);
  auto* o_e1 = train->add_option("--phase1-epochs", opts.cfg.phase1_epochs);
  auto* o_e2 = train->add_option("--phase2-epochs", opts.cfg.phase2_epochs);
  auto* o_cp = train->add_option("--cloud-points", opts.cfg.cloud_points);
  auto* o_seed = train->add_option("--seed", opts.cfg.seed);
  auto* o_hl = train->add_option("--hidden-layers", opts.cfg.field.hidden_layers);
  auto* o_hw = train->add_option("--hidden-width", opts.cfg.field.hidden_width);
  auto* o_fx = train->add_option("--freqs-x", opts.cfg.field.freqs_x);
  auto* o_fd = train->add_option("--freqs-d", opts.cfg.field.freqs_d);
  auto* o_l1 = train->add_option("--lambda-depth", opts.cfg.weights.lambda1);
  auto* o_l2 = train->add_option("--lambda-pc", opts.cfg.weights.lambda2);
  auto* o_l3 = train->add_option("--lambda-surface", opts.cfg.weights.lambda3);
  auto* o_fz = train->add_flag("--freeze-distortion", opts.cfg.freeze_distortion);
  auto* o_pl = train->add_flag("--plateau", opts.cfg.plateau_phase1);
  auto* o_hn = train->add_option("--h-near", opts.cfg.h_near);
  auto* o_hf = train->add_option("--h-far", opts.cfg.h_far);
  auto* o_ck = train->add_option("--checkpoint-every", opts.checkpoint_every);
  auto* o_ho = train->add_option("--holdout-every", opts.holdout_every);
  train->add_option("--resume", opts.resume, "checkpoint to resume from");

  // eval
  auto* evalc = app.add_subcommand("eval", "score a checkpoint against "
                                           "ground truth");
  std::string e_data, e_ckpt, e_out = "eval_out";
  bool e_nvs = false;
  int e_hold = 8, e_steps = 300;
  size_t e_rays = 256;
  evalc->add_option("--data", e_data)->required();
  evalc->add_option("--ckpt", e_ckpt)->required();
  evalc->add_option("--out", e_out);
  evalc->add_flag("--nvs", e_nvs, "held-out view synthesis protocol");
  evalc->add_option("--holdout-every", e_hold);
  evalc->add_option("--register-steps", e_steps);
  evalc->add_option("--register-rays", e_rays);

  // render
  auto* render = app.add_subcommand("render", "render one trained frame");
  std::string r_data, r_ckpt, r_img = "render.ppm", r_depth;
  int r_frame = 0, r_samples = 128;
  render->add_option("--data", r_data)->required();
  render->add_option("--ckpt", r_ckpt)->required();
  render->add_option("--frame", r_frame);
  render->add_option("--out", r_img);
  render->add_option("--depth-out", r_depth);
  render->add_option("--samples", r_samples);

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference audit of "
                                             "every gradient path");
  double gc_tol = 1e-4;
  gc->add_option("--tol", gc_tol);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth)
      return cmd_synth(s_out, s_frames, s_w, s_h, s_traj, s_sweep, s_radius,
                       s_dist, s_seed, s_quad, s_textured, s_scene, s_near,
                       s_far);
    if (*train) {
      // config file fills anything the command line left untouched
      if (!t_config.empty()) {
        TrainOpts from_file;
        apply_config_file(t_config, from_file);
        auto keep = [](CLI::Option* o) { return o->count() > 0; };
        if (!keep(o_rays)) opts.cfg.rays_per_image = from_file.cfg.rays_per_image;
        if (!keep(o_samples)) opts.cfg.samples_per_ray = from_file.cfg.samples_per_ray;
        if (!keep(o_lrn)) opts.cfg.lr_nerf = from_file.cfg.lr_nerf;
        if (!keep(o_lrp)) opts.cfg.lr_pose_dist = from_file.cfg.lr_pose_dist;
        if (!keep(o_e1)) opts.cfg.phase1_epochs = from_file.cfg.phase1_epochs;
        if (!keep(o_e2)) opts.cfg.phase2_epochs = from_file.cfg.phase2_epochs;
        if (!keep(o_cp)) opts.cfg.cloud_points = from_file.cfg.cloud_points;
        if (!keep(o_seed)) opts.cfg.seed = from_file.cfg.seed;
        if (!keep(o_hl)) opts.cfg.field.hidden_layers = from_file.cfg.field.hidden_layers;
        if (!keep(o_hw)) opts.cfg.field.hidden_width = from_file.cfg.field.hidden_width;
        if (!keep(o_fx)) opts.cfg.field.freqs_x = from_file.cfg.field.freqs_x;
        if (!keep(o_fd)) opts.cfg.field.freqs_d = from_file.cfg.field.freqs_d;
        if (!keep(o_l1)) opts.cfg.weights.lambda1 = from_file.cfg.weights.lambda1;
        if (!keep(o_l2)) opts.cfg.weights.lambda2 = from_file.cfg.weights.lambda2;
        if (!keep(o_l3)) opts.cfg.weights.lambda3 = from_file.cfg.weights.lambda3;
        if (!keep(o_fz)) opts.cfg.freeze_distortion = from_file.cfg.freeze_distortion;
        if (!keep(o_pl)) opts.cfg.plateau_phase1 = from_file.cfg.plateau_phase1;
        if (!keep(o_ck)) opts.checkpoint_every = from_file.checkpoint_every;
        if (!keep(o_ho)) opts.holdout_every = from_file.holdout_every;
        if (!keep(o_hn)) opts.cfg.h_near = from_file.cfg.h_near;
        if (!keep(o_hf)) opts.cfg.h_far = from_file.cfg.h_far;
        opts.cfg.nerf_lr_decay = from_file.cfg.nerf_lr_decay;
        opts.cfg.pose_lr_decay = from_file.cfg.pose_lr_decay;
        opts.cfg.interframe_weight_decay =
            from_file.cfg.interframe_weight_decay;
      }
      return cmd_train(t_data, t_out, opts);
    }
    if (*evalc)
      return cmd_eval(e_data, e_ckpt, e_out, e_nvs, e_hold, e_steps, e_rays);
    if (*render)
      return cmd_render(r_data, r_ckpt, r_frame, r_img, r_depth, r_samples);
    if (*gc) return cmd_gradcheck(gc_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
