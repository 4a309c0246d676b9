#include "npnf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>

#include "npnf/io.hpp"

namespace npnf {

TrainState init_state(const TrainDataset& data, const TrainConfig& config) {
  if (data.frame_count() < 2)
    throw DegenerateConfiguration("dataset needs >= 2 frames");
  TrainState s;
  s.theta = init_field(config.field, config.seed);
  s.poses.assign(data.frame_count(), PoseParam{});
  s.dists.assign(data.frame_count(), DistortionParam{1.0, 0.0});
  s.adam_nerf = AdamState(s.theta.values.size());
  s.adam_pose = AdamState(8 * data.frame_count());
  s.lr_nerf = config.lr_nerf;
  s.lr_pose = config.lr_pose_dist;
  s.weights = config.weights;
  s.rng.reseed(config.seed);
  return s;
}

namespace {

// last frame's alpha is pinned: its gradient is masked so its Adam moments
// stay identically zero and the value never moves
void apply_pose_dist_step(TrainState& state, const Gradients& grads,
                          const TrainConfig& config) {
  size_t n = state.poses.size();
  std::vector<double> packed(8 * n), g(8 * n);
  for (size_t f = 0; f < n; ++f) {
    const PoseParam& p = state.poses[f];
    double* dst = &packed[6 * f];
    dst[0] = p.phi.x; dst[1] = p.phi.y; dst[2] = p.phi.z;
    dst[3] = p.t.x; dst[4] = p.t.y; dst[5] = p.t.z;
    packed[6 * n + 2 * f] = state.dists[f].alpha;
    packed[6 * n + 2 * f + 1] = state.dists[f].beta;
  }
  std::copy(grads.poses.begin(), grads.poses.end(), g.begin());
  std::copy(grads.dists.begin(), grads.dists.end(), g.begin() + 6 * n);
  if (config.freeze_distortion) {
    std::fill(g.begin() + 6 * n, g.end(), 0.0);
  }
  g[6 * n + 2 * (n - 1)] = 0.0;  // pinned alpha
  adam_step(packed, g, state.adam_pose, state.lr_pose);
  for (size_t f = 0; f < n; ++f) {
    double* src = &packed[6 * f];
    state.poses[f] =
        PoseParam{{src[0], src[1], src[2]}, {src[3], src[4], src[5]}};
    state.dists[f].alpha =
        std::max(packed[6 * n + 2 * f], kAlphaMin);  // projection
    state.dists[f].beta = packed[6 * n + 2 * f + 1];
  }
  state.dists[n - 1].alpha = 1.0;
}

}  // namespace

LossReport train_epoch(TrainState& state, const TrainDataset& data,
                       const TrainConfig& config) {
  size_t n = data.frame_count();
  std::vector<uint32_t> order =
      state.rng.sample_without_replacement(uint32_t(n), uint32_t(n));
  RenderConfig rcfg = config.render(true);
  FieldParamRef theta_ref{&state.theta.config, state.theta.values};
  LossReport epoch;
  Gradients grads(state.theta.values.size(), n);
  for (uint32_t frame : order) {
    StepSample sample =
        make_step_sample(data, int(frame), config.rays_per_image,
                         config.cloud_points, rcfg, state.dists, state.rng);
    grads.reset();
    LossReport r;
    try {
      r = total_loss(data, theta_ref, state.poses, state.dists, state.weights,
                     rcfg, sample, &grads);
    } catch (const NoVisibleOverlap&) {
      epoch.skipped_pairs += 1;
      continue;
    }
    adam_step(state.theta.values, grads.theta, state.adam_nerf, state.lr_nerf);
    apply_pose_dist_step(state, grads, config);
    epoch.l_rgb += r.l_rgb;
    epoch.l_depth += r.l_depth;
    epoch.l_pc += r.l_pc;
    epoch.l_rgbs += r.l_rgbs;
    epoch.total += r.total;
    epoch.skipped_pairs += r.skipped_pairs;
  }
  double inv = 1.0 / double(n);
  epoch.l_rgb *= inv;
  epoch.l_depth *= inv;
  epoch.l_pc *= inv;
  epoch.l_rgbs *= inv;
  epoch.total *= inv;
  epoch.n_rgb = config.rays_per_image * n;
  state.epoch += 1;
  return epoch;
}

void run_schedule(TrainState& state, const TrainDataset& data,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  auto emit = [&](const LossReport& r) {
    if (on_epoch) on_epoch(state.epoch, r, state.lr_nerf, state.lr_pose);
  };
  // phase 1: constant rates
  std::deque<double> window;
  for (int e = 0; e < config.phase1_epochs; ++e) {
    LossReport r = train_epoch(state, data, config);
    emit(r);
    if (config.plateau_phase1) {
      window.push_back(r.total);
      if (window.size() > 20) window.pop_front();
      if (window.size() == 20) {
        double lo = *std::min_element(window.begin(), window.end());
        double hi = *std::max_element(window.begin(), window.end());
        if (hi - lo < 1e-4 * std::max(hi, 1e-12)) break;
      }
    }
  }
  // phase 2: decaying rates and inter-frame weights
  for (int e = 0; e < config.phase2_epochs; ++e) {
    if (e % 10 == 0 && e > 0) state.lr_nerf *= config.nerf_lr_decay;
    if (e % 100 == 0 && e > 0) state.lr_pose *= config.pose_lr_decay;
    state.weights.lambda1 *= config.interframe_weight_decay;
    state.weights.lambda2 *= config.interframe_weight_decay;
    state.weights.lambda3 *= config.interframe_weight_decay;
    LossReport r = train_epoch(state, data, config);
    emit(r);
  }
}

PoseParam register_test_pose(const FieldParams& theta, const Image& test_image,
                             const Intrinsics& K, const PoseParam& init,
                             int steps, double lr, const RenderConfig& rcfg,
                             size_t rays_per_step, uint64_t seed) {
  Rng rng(seed);
  PoseParam pose = init;
  AdamState adam(6);
  TrainDataset single;
  single.K = K;
  single.images.push_back(test_image);
  single.pseudo_depth.emplace_back(K.width, K.height, 1.0);
  std::vector<DistortionParam> dists{DistortionParam{}};
  FieldParamRef theta_ref{&theta.config, theta.values};
  LossWeights rgb_only{0.0, 0.0, 0.0};
  Gradients grads(theta.values.size(), 1);
  for (int s = 0; s < steps; ++s) {
    StepSample sample = make_step_sample(single, 0, rays_per_step, 0, rcfg,
                                         dists, rng);
    grads.reset();
    total_loss(single, theta_ref, {&pose, 1}, dists, rgb_only, rcfg, sample,
               &grads);
    double packed[6] = {pose.phi.x, pose.phi.y, pose.phi.z,
                        pose.t.x, pose.t.y, pose.t.z};
    adam_step(packed, {grads.poses.data(), 6}, adam, lr);
    pose = PoseParam{{packed[0], packed[1], packed[2]},
                     {packed[3], packed[4], packed[5]}};
  }
  return pose;
}

size_t nearest_train_frame(size_t test_index,
                           const std::vector<size_t>& train_indices) {
  size_t best = train_indices.front();
  size_t best_d = SIZE_MAX;
  for (size_t idx : train_indices) {
    size_t d = idx > test_index ? idx - test_index : test_index - idx;
    if (d < best_d) {
      best_d = d;
      best = idx;
    }
  }
  return best;
}

namespace {

constexpr char kCheckpointMagic[4] = {'N', 'P', 'N', 'F'};

std::vector<double> rng_block(const Rng& rng) {
  auto s = rng.state();
  std::vector<double> out(4);
  std::memcpy(out.data(), s.data(), sizeof s);
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const TrainState& state) {
  const FieldConfig& fc = state.theta.config;
  std::vector<double> meta = {
      double(state.poses.size()),     double(state.epoch),
      state.lr_nerf,                  state.lr_pose,
      state.weights.lambda1,          state.weights.lambda2,
      state.weights.lambda3,          double(state.adam_nerf.step),
      double(state.adam_pose.step),   double(fc.hidden_layers),
      double(fc.hidden_width),        double(fc.freqs_x),
      double(fc.freqs_d)};
  std::vector<double> poses, dists;
  for (const auto& p : state.poses) {
    poses.insert(poses.end(),
                 {p.phi.x, p.phi.y, p.phi.z, p.t.x, p.t.y, p.t.z});
  }
  for (const auto& d : state.dists) dists.insert(dists.end(), {d.alpha, d.beta});
  write_blocks(path, kCheckpointMagic, 1,
               {meta, state.theta.values, poses, dists, state.adam_nerf.m,
                state.adam_nerf.v, state.adam_pose.m, state.adam_pose.v,
                rng_block(state.rng)});
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  auto blocks = read_blocks(path, kCheckpointMagic, 1);
  if (blocks.size() != 9) throw IoError("bad checkpoint block count");
  const auto& meta = blocks[0];
  TrainState s;
  size_t n = size_t(meta[0]);
  s.epoch = uint64_t(meta[1]);
  s.lr_nerf = meta[2];
  s.lr_pose = meta[3];
  s.weights = {meta[4], meta[5], meta[6]};
  s.theta.config = FieldConfig{int(meta[9]), int(meta[10]), int(meta[11]),
                               int(meta[12])};
  s.theta.values = blocks[1];
  if (s.theta.values.size() != s.theta.config.param_count())
    throw IoError("checkpoint field size mismatch");
  for (size_t f = 0; f < n; ++f) {
    const double* p = &blocks[2][6 * f];
    s.poses.push_back(PoseParam{{p[0], p[1], p[2]}, {p[3], p[4], p[5]}});
    s.dists.push_back({blocks[3][2 * f], blocks[3][2 * f + 1]});
  }
  s.adam_nerf = AdamState(s.theta.values.size());
  s.adam_nerf.m = blocks[4];
  s.adam_nerf.v = blocks[5];
  s.adam_nerf.step = uint64_t(meta[7]);
  s.adam_pose = AdamState(8 * n);
  s.adam_pose.m = blocks[6];
  s.adam_pose.v = blocks[7];
  s.adam_pose.step = uint64_t(meta[8]);
  std::array<uint64_t, 4> rs;
  std::memcpy(rs.data(), blocks[8].data(), sizeof rs);
  s.rng.set_state(rs);
  return s;
}

}  // namespace npnf
