#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "npnf/io.hpp"
#include "npnf/rng.hpp"
#include "npnf/synth.hpp"

using namespace npnf;

namespace {
std::filesystem::path tmpdir() {
  auto p = std::filesystem::temp_directory_path() / "npnf_io_test";
  std::filesystem::create_directories(p);
  return p;
}
}  // namespace

TEST_CASE("ppm images survive a round trip within 8-bit precision") {
  Image img(7, 5);
  Rng rng(2);
  for (auto& v : img.rgb) v = rng.uniform(0.0, 1.0);
  auto path = tmpdir() / "img.ppm";
  write_ppm(path, img);
  Image back = read_ppm(path);
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (size_t i = 0; i < img.rgb.size(); ++i)
    CHECK(std::fabs(back.rgb[i] - img.rgb[i]) <= 0.5 / 255.0 + 1e-12);
  // values already on the 8-bit grid come back exactly
  Image grid(3, 3);
  for (size_t i = 0; i < grid.rgb.size(); ++i)
    grid.rgb[i] = double(i % 256) / 255.0;
  write_ppm(path, grid);
  Image grid_back = read_ppm(path);
  CHECK(grid_back.rgb == grid.rgb);
}

TEST_CASE("pfm depth maps round trip at float precision") {
  DepthMap d(6, 4);
  Rng rng(3);
  for (auto& v : d.values) v = double(float(rng.uniform(0.1, 9.0)));
  auto path = tmpdir() / "depth.pfm";
  write_pfm(path, d);
  DepthMap back = read_pfm(path);
  REQUIRE(back.width == 6);
  REQUIRE(back.height == 4);
  CHECK(back.values == d.values);  // inputs were float-exact
}

TEST_CASE("missing files raise io errors") {
  CHECK_THROWS_AS(read_ppm(tmpdir() / "nope.ppm"), IoError);
  CHECK_THROWS_AS(read_pfm(tmpdir() / "nope.pfm"), IoError);
}

TEST_CASE("quaternion conversion round trips rotations") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    Mat3 R = exp_so3({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
    Quat q = rotation_to_quat(R);
    CHECK(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w ==
          doctest::Approx(1.0).epsilon(1e-12));
    Mat3 back = quat_to_rotation(q);
    for (int k = 0; k < 9; ++k)
      CHECK(back.m[k] == doctest::Approx(R.m[k]).epsilon(1e-12));
  }
}

TEST_CASE("trajectory files round trip the poses") {
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 5, TrajectoryParams{});
  auto path = tmpdir() / "traj.txt";
  write_trajectory(path, traj.poses);
  auto back = read_trajectory(path);
  REQUIRE(back.size() == traj.poses.size());
  for (size_t i = 0; i < back.size(); ++i) {
    Mat3 Ra = pose_to_transform(traj.poses[i]).R;
    Mat3 Rb = pose_to_transform(back[i]).R;
    for (int k = 0; k < 9; ++k)
      CHECK(Rb.m[k] == doctest::Approx(Ra.m[k]).epsilon(1e-9));
    CHECK(norm3(back[i].t - traj.poses[i].t) < 1e-9);
  }
  // the stored convention is camera-to-world: line 0 holds the center
  std::ifstream f(path);
  int id;
  double tx, ty, tz;
  f >> id >> tx >> ty >> tz;
  Vec3 c = camera_center(pose_to_transform(traj.poses[0]));
  CHECK(tx == doctest::Approx(c.x).epsilon(1e-9));
  CHECK(tz == doctest::Approx(c.z).epsilon(1e-9));
}

TEST_CASE("block container enforces magic and version") {
  auto path = tmpdir() / "blocks.bin";
  std::vector<std::vector<double>> blocks{{1.5, -2.25}, {}, {3.0}};
  write_blocks(path, "TEST", 7, blocks);
  auto back = read_blocks(path, "TEST", 7);
  CHECK(back == blocks);
  CHECK_THROWS_AS(read_blocks(path, "NOPE", 7), IoError);
  CHECK_THROWS_AS(read_blocks(path, "TEST", 8), IoError);
}

TEST_CASE("dataset directories round trip through the manifest") {
  AnalyticScene scene = default_scene(true);
  Intrinsics K{12, 12, 5, 5, 10, 10};
  Trajectory traj =
      make_trajectory(TrajectoryKind::kOrbit, 3, TrajectoryParams{});
  SynthDataset data = make_dataset(scene, traj, K, 128, 0.1, 10.0,
                                   random_distortion(3, 2.0, 4));
  auto dir = tmpdir() / "dataset";
  save_synth_dataset(dir, data, 99);
  LoadedDataset loaded = load_dataset(dir);
  REQUIRE(loaded.train.frame_count() == 3);
  CHECK(loaded.train.K.fx == doctest::Approx(K.fx));
  CHECK(loaded.train.K.width == K.width);
  REQUIRE(loaded.gt_poses.size() == 3);
  REQUIRE(loaded.gt_dists.size() == 3);
  REQUIRE(loaded.gt_depth.size() == 3);
  for (size_t f = 0; f < 3; ++f) {
    CHECK(loaded.gt_dists[f].alpha ==
          doctest::Approx(data.gt_dists[f].alpha).epsilon(1e-12));
    for (size_t i = 0; i < loaded.train.images[f].rgb.size(); ++i)
      CHECK(std::fabs(loaded.train.images[f].rgb[i] -
                      data.train.images[f].rgb[i]) <= 0.5 / 255.0 + 1e-12);
    for (size_t i = 0; i < loaded.train.pseudo_depth[f].values.size(); ++i)
      CHECK(std::fabs(loaded.train.pseudo_depth[f].values[i] -
                      data.train.pseudo_depth[f].values[i]) < 1e-5);
    Mat3 Ra = pose_to_transform(loaded.gt_poses[f]).R;
    Mat3 Rb = pose_to_transform(data.gt_poses[f]).R;
    for (int k = 0; k < 9; ++k)
      CHECK(Ra.m[k] == doctest::Approx(Rb.m[k]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(load_dataset(tmpdir() / "no_such_dir"), IoError);
}

TEST_CASE("metrics csv appends one row per step with a header") {
  auto path = tmpdir() / "metrics.csv";
  std::filesystem::remove(path);
  LossReport r;
  r.l_rgb = 0.5;
  r.l_depth = 0.25;
  r.l_pc = 0.125;
  r.l_rgbs = 0.0625;
  r.total = 0.9375;
  append_metrics_csv(path, 1, r, 0.001, 0.0005);
  append_metrics_csv(path, 2, r, 0.001, 0.0005);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "step,l_rgb,l_depth,l_pc,l_rgbs,total,lr_nerf,lr_pose");
  int rows = 0;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}
