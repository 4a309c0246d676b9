// Parallel vs serial image rendering, plus the training-step hot loop.

#include <benchmark/benchmark.h>

#include "npnf/losses.hpp"
#include "npnf/render.hpp"
#include "npnf/synth.hpp"

using namespace npnf;

namespace {

struct BenchScene {
  FieldParams theta = init_field(FieldConfig{2, 32, 4, 1}, 7);
  Intrinsics K{43.2, 43.2, 24, 24, 48, 48};
  PoseParam pose;
  RenderConfig cfg{0.1, 10.0, 64, true, 11};
  std::vector<std::pair<int, int>> pixels = all_pixels(48, 48);

  BenchScene() {
    Trajectory traj =
        make_trajectory(TrajectoryKind::kOrbit, 2, TrajectoryParams{});
    pose = traj.poses[0];
  }
};

void bm_render_parallel(benchmark::State& state) {
  BenchScene s;
  Image img(48, 48);
  DepthMap dep(48, 48);
  for (auto _ : state) {
    render_image(s.theta, s.pose, s.K, s.cfg, s.pixels, img, dep);
    benchmark::DoNotOptimize(img.rgb.data());
  }
}

void bm_render_serial(benchmark::State& state) {
  BenchScene s;
  Image img(48, 48);
  DepthMap dep(48, 48);
  for (auto _ : state) {
    render_image_serial(s.theta, s.pose, s.K, s.cfg, s.pixels, img, dep);
    benchmark::DoNotOptimize(img.rgb.data());
  }
}

void bm_loss_gradients(benchmark::State& state) {
  BenchScene s;
  AnalyticScene scene = default_scene(true);
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 3, TrajectoryParams{});
  SynthDataset data =
      make_dataset(scene, traj, s.K, 256, 0.1, 10.0, identity_distortion(3));
  std::vector<PoseParam> poses(3);
  std::vector<DistortionParam> dists(3);
  Rng rng(3);
  StepSample sample =
      make_step_sample(data.train, 0, 64, 128, s.cfg, dists, rng);
  FieldParamRef ref{&s.theta.config, s.theta.values};
  Gradients grads(s.theta.values.size(), 3);
  for (auto _ : state) {
    grads.reset();
    LossReport r = total_loss(data.train, ref, poses, dists, LossWeights{},
                              s.cfg, sample, &grads);
    benchmark::DoNotOptimize(r.total);
  }
}

}  // namespace

BENCHMARK(bm_render_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_render_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_loss_gradients)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
