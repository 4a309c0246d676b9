#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "npnf/adam.hpp"
#include "npnf/field.hpp"
#include "npnf/losses.hpp"
#include "npnf/rng.hpp"

namespace npnf {

struct TrainConfig {
  size_t rays_per_image = 1024;
  int samples_per_ray = 128;
  double h_near = 0.1, h_far = 10.0;
  double lr_nerf = 0.001;
  double lr_pose_dist = 0.0005;
  int phase1_epochs = 200;
  int phase2_epochs = 500;
  double nerf_lr_decay = 0.9954;          // applied every 10 phase-2 epochs
  double pose_lr_decay = 0.9;             // applied every 100 phase-2 epochs
  double interframe_weight_decay = 0.995;  // per phase-2 epoch, on all lambdas
  size_t cloud_points = 1024;
  uint64_t seed = 0;
  bool freeze_distortion = false;  // the "scales 1, shifts 0" ablation
  bool plateau_phase1 = false;     // end phase 1 early on loss plateau
  FieldConfig field;
  LossWeights weights;

  RenderConfig render(bool noise) const {
    return RenderConfig{h_near, h_far, samples_per_ray, noise, seed};
  }
};

struct TrainState {
  FieldParams theta;
  std::vector<PoseParam> poses;
  std::vector<DistortionParam> dists;
  AdamState adam_nerf;
  AdamState adam_pose;  // packed [poses 6N | dists 2N]
  uint64_t epoch = 0;
  double lr_nerf = 0.0, lr_pose = 0.0;
  LossWeights weights;  // current (phase-2 decayed) weights
  Rng rng;
};

// All poses identity, distortions (1, 0), field seeded from config.seed.
TrainState init_state(const TrainDataset& data, const TrainConfig& config);

// One pass over the frames in shuffled order: one Adam step per optimizer
// per frame visit; alpha clamped positive and the last frame's alpha kept
// pinned at 1 afterwards. Returns the mean report over visits.
LossReport train_epoch(TrainState& state, const TrainDataset& data,
                       const TrainConfig& config);

using EpochCallback =
    std::function<void(uint64_t epoch, const LossReport&, double lr_nerf,
                       double lr_pose)>;

// Phase 1 at constant rates for phase1_epochs (or until plateau when
// enabled), then phase 2 with the two lr schedules and per-epoch decay of
// the inter-frame/depth weights.
void run_schedule(TrainState& state, const TrainDataset& data,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = nullptr);

// Photometric-only pose refinement against a frozen field.
PoseParam register_test_pose(const FieldParams& theta, const Image& test_image,
                             const Intrinsics& K, const PoseParam& init,
                             int steps, double lr, const RenderConfig& rcfg,
                             size_t rays_per_step, uint64_t seed);

// Index of the training frame nearest in sequence order to a held-out
// test index ("neighbour" initialization).
size_t nearest_train_frame(size_t test_index,
                           const std::vector<size_t>& train_indices);

void save_checkpoint(const std::filesystem::path& path,
                     const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace npnf
