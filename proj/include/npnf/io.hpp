#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npnf/core.hpp"
#include "npnf/depthprior.hpp"
#include "npnf/geom.hpp"
#include "npnf/losses.hpp"

namespace npnf {

// ---- images: binary PPM (P6, 8-bit) ----
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

// ---- depth maps: PFM, grayscale, little-endian (scale -1.0) ----
void write_pfm(const std::filesystem::path& path, const DepthMap& d);
DepthMap read_pfm(const std::filesystem::path& path);

// ---- trajectories: "frame_id tx ty tz qx qy qz qw", camera-to-world ----
struct Quat {
  double x, y, z, w;
};
Quat rotation_to_quat(const Mat3& R);
Mat3 quat_to_rotation(const Quat& q);

void write_trajectory(const std::filesystem::path& path,
                      const std::vector<PoseParam>& poses);
std::vector<PoseParam> read_trajectory(const std::filesystem::path& path);

// ---- versioned binary container: magic, u32 version, then
//      length-prefixed f64 blocks ----
void write_blocks(const std::filesystem::path& path, const char magic[4],
                  uint32_t version,
                  const std::vector<std::vector<double>>& blocks);
std::vector<std::vector<double>> read_blocks(const std::filesystem::path& path,
                                             const char magic[4],
                                             uint32_t expect_version);

// ---- dataset directory ----
struct LoadedDataset {
  TrainDataset train;
  std::vector<DepthMap> gt_depth;          // empty if absent
  std::vector<PoseParam> gt_poses;         // empty if absent
  std::vector<DistortionParam> gt_dists;   // empty if absent
};

struct DatasetPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

void save_dataset(const std::filesystem::path& dir, const TrainDataset& train,
                  const std::vector<DepthMap>& gt_depth,
                  const std::vector<PoseParam>& gt_poses,
                  const std::vector<DistortionParam>& gt_dists,
                  uint64_t seed);

// metrics CSV: fixed columns step,l_rgb,l_depth,l_pc,l_rgbs,total,lr_nerf,lr_pose
void append_metrics_csv(const std::filesystem::path& path, uint64_t step,
                        const LossReport& report, double lr_nerf,
                        double lr_pose);

}  // namespace npnf
