#include "npnf/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace npnf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  return f;
}

}  // namespace

void write_ppm(const fs::path& path, const Image& img) {
  auto f = open_out(path, true);
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> buf(img.rgb.size());
  for (size_t i = 0; i < img.rgb.size(); ++i) {
    double v = std::clamp(img.rgb[i], 0.0, 1.0);
    buf[i] = uint8_t(std::lround(v * 255.0));
  }
  f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
}

Image read_ppm(const fs::path& path) {
  auto f = open_in(path, true);
  std::string magic;
  int w, h, maxval;
  f >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255) throw IoError("unsupported PPM: " + path.string());
  f.get();  // single whitespace after header
  Image img(w, h);
  std::vector<uint8_t> buf(img.rgb.size());
  f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (!f) throw IoError("truncated PPM: " + path.string());
  for (size_t i = 0; i < buf.size(); ++i) img.rgb[i] = buf[i] / 255.0;
  return img;
}

void write_pfm(const fs::path& path, const DepthMap& d) {
  auto f = open_out(path, true);
  f << "Pf\n" << d.width << " " << d.height << "\n-1.0\n";
  // PFM stores rows bottom-to-top
  std::vector<float> row(d.width);
  for (int v = d.height - 1; v >= 0; --v) {
    for (int u = 0; u < d.width; ++u) row[u] = float(d.at(u, v));
    f.write(reinterpret_cast<const char*>(row.data()),
            std::streamsize(row.size() * sizeof(float)));
  }
}

DepthMap read_pfm(const fs::path& path) {
  auto f = open_in(path, true);
  std::string magic;
  int w, h;
  double scale;
  f >> magic >> w >> h >> scale;
  if (magic != "Pf" || scale >= 0) throw IoError("unsupported PFM: " + path.string());
  f.get();
  DepthMap d(w, h);
  std::vector<float> row(w);
  for (int v = h - 1; v >= 0; --v) {
    f.read(reinterpret_cast<char*>(row.data()),
           std::streamsize(row.size() * sizeof(float)));
    if (!f) throw IoError("truncated PFM: " + path.string());
    for (int u = 0; u < w; ++u) d.at(u, v) = row[u];
  }
  return d;
}

Quat rotation_to_quat(const Mat3& R) {
  double tr = R(0, 0) + R(1, 1) + R(2, 2);
  Quat q;
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (R(2, 1) - R(1, 2)) / s;
    q.y = (R(0, 2) - R(2, 0)) / s;
    q.z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2)) * 2.0;
    q.w = (R(2, 1) - R(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (R(0, 1) + R(1, 0)) / s;
    q.z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) > R(2, 2)) {
    double s = std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2)) * 2.0;
    q.w = (R(0, 2) - R(2, 0)) / s;
    q.x = (R(0, 1) + R(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (R(1, 2) + R(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1)) * 2.0;
    q.w = (R(1, 0) - R(0, 1)) / s;
    q.x = (R(0, 2) + R(2, 0)) / s;
    q.y = (R(1, 2) + R(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q;
}

Mat3 quat_to_rotation(const Quat& q) {
  double x = q.x, y = q.y, z = q.z, w = q.w;
  double n = std::sqrt(x * x + y * y + z * z + w * w);
  x /= n; y /= n; z /= n; w /= n;
  Mat3 R;
  R(0, 0) = 1 - 2 * (y * y + z * z);
  R(0, 1) = 2 * (x * y - z * w);
  R(0, 2) = 2 * (x * z + y * w);
  R(1, 0) = 2 * (x * y + z * w);
  R(1, 1) = 1 - 2 * (x * x + z * z);
  R(1, 2) = 2 * (y * z - x * w);
  R(2, 0) = 2 * (x * z - y * w);
  R(2, 1) = 2 * (y * z + x * w);
  R(2, 2) = 1 - 2 * (x * x + y * y);
  return R;
}

void write_trajectory(const fs::path& path,
                      const std::vector<PoseParam>& poses) {
  auto f = open_out(path, false);
  f.precision(17);
  for (size_t i = 0; i < poses.size(); ++i) {
    RigidTransform T = pose_to_transform(poses[i]);
    Vec3 c = camera_center(T);
    Quat q = rotation_to_quat(transposed(T.R));  // camera-to-world
    f << i << " " << c.x << " " << c.y << " " << c.z << " " << q.x << " "
      << q.y << " " << q.z << " " << q.w << "\n";
  }
}

std::vector<PoseParam> read_trajectory(const fs::path& path) {
  auto f = open_in(path, false);
  std::vector<PoseParam> poses;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    long id;
    Vec3 c;
    Quat q;
    if (!(ss >> id >> c.x >> c.y >> c.z >> q.x >> q.y >> q.z >> q.w))
      throw IoError("bad trajectory line: " + line);
    Mat3 R_c2w = quat_to_rotation(q);
    Mat3 R = transposed(R_c2w);  // world-to-camera
    Vec3 t = matvec(R, c) * -1.0;
    poses.push_back(PoseParam{log_so3(R), t});
  }
  return poses;
}

void write_blocks(const fs::path& path, const char magic[4], uint32_t version,
                  const std::vector<std::vector<double>>& blocks) {
  auto f = open_out(path, true);
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  uint32_t n = uint32_t(blocks.size());
  f.write(reinterpret_cast<const char*>(&n), 4);
  for (const auto& b : blocks) {
    uint64_t len = b.size();
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write(reinterpret_cast<const char*>(b.data()),
            std::streamsize(len * sizeof(double)));
  }
}

std::vector<std::vector<double>> read_blocks(const fs::path& path,
                                             const char magic[4],
                                             uint32_t expect_version) {
  auto f = open_in(path, true);
  char m[4];
  uint32_t version, n;
  f.read(m, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&n), 4);
  if (!f || std::memcmp(m, magic, 4) != 0)
    throw IoError("bad magic in " + path.string());
  if (version != expect_version) throw IoError("unsupported version in " + path.string());
  std::vector<std::vector<double>> blocks(n);
  for (auto& b : blocks) {
    uint64_t len;
    f.read(reinterpret_cast<char*>(&len), 8);
    b.resize(len);
    f.read(reinterpret_cast<char*>(b.data()),
           std::streamsize(len * sizeof(double)));
    if (!f) throw IoError("truncated file: " + path.string());
  }
  return blocks;
}

namespace {

std::string frame_name(const char* stem, size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.%s", stem, i, ext);
  return buf;
}

}  // namespace

void save_dataset(const fs::path& dir, const TrainDataset& train,
                  const std::vector<DepthMap>& gt_depth,
                  const std::vector<PoseParam>& gt_poses,
                  const std::vector<DistortionParam>& gt_dists,
                  uint64_t seed) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "depth");
  if (!gt_depth.empty()) fs::create_directories(dir / "gt_depth");

  json manifest;
  manifest["format_version"] = 1;
  manifest["frame_count"] = train.frame_count();
  manifest["seed"] = seed;
  manifest["intrinsics"] = {{"fx", train.K.fx}, {"fy", train.K.fy},
                            {"cx", train.K.cx}, {"cy", train.K.cy},
                            {"width", train.K.width}, {"height", train.K.height}};
  json frames = json::array();
  for (size_t i = 0; i < train.frame_count(); ++i) {
    json fr;
    fr["image"] = "images/" + frame_name("frame", i, "ppm");
    fr["depth"] = "depth/" + frame_name("frame", i, "pfm");
    write_ppm(dir / std::string(fr["image"]), train.images[i]);
    write_pfm(dir / std::string(fr["depth"]), train.pseudo_depth[i]);
    if (!gt_depth.empty()) {
      fr["gt_depth"] = "gt_depth/" + frame_name("frame", i, "pfm");
      write_pfm(dir / std::string(fr["gt_depth"]), gt_depth[i]);
    }
    frames.push_back(fr);
  }
  manifest["frames"] = frames;
  if (!gt_poses.empty()) {
    manifest["gt_poses"] = "gt_poses.txt";
    write_trajectory(dir / "gt_poses.txt", gt_poses);
  }
  if (!gt_dists.empty()) {
    json jd = json::array();
    for (const auto& d : gt_dists)
      jd.push_back({{"alpha", d.alpha}, {"beta", d.beta}});
    manifest["gt_distortion"] = jd;
  }
  auto f = open_out(dir / "manifest.json", false);
  f << manifest.dump(2) << "\n";
}

LoadedDataset load_dataset(const fs::path& dir) {
  auto f = open_in(dir / "manifest.json", false);
  json manifest = json::parse(f);
  if (manifest.at("format_version").get<int>() != 1)
    throw IoError("unrecognized dataset format version");
  LoadedDataset out;
  auto ji = manifest.at("intrinsics");
  out.train.K = {ji.at("fx"), ji.at("fy"), ji.at("cx"), ji.at("cy"),
                 ji.at("width"), ji.at("height")};
  for (const auto& fr : manifest.at("frames")) {
    out.train.images.push_back(read_ppm(dir / std::string(fr.at("image"))));
    out.train.pseudo_depth.push_back(
        read_pfm(dir / std::string(fr.at("depth"))));
    if (fr.contains("gt_depth"))
      out.gt_depth.push_back(read_pfm(dir / std::string(fr.at("gt_depth"))));
  }
  if (manifest.contains("gt_poses"))
    out.gt_poses = read_trajectory(dir / std::string(manifest.at("gt_poses")));
  if (manifest.contains("gt_distortion")) {
    for (const auto& jd : manifest.at("gt_distortion"))
      out.gt_dists.push_back({jd.at("alpha"), jd.at("beta")});
  }
  size_t n = out.train.frame_count();
  if (n != manifest.at("frame_count").get<size_t>())
    throw IoError("manifest frame count mismatch");
  if (!out.gt_poses.empty() && out.gt_poses.size() != n)
    throw IoError("gt pose count mismatch");
  return out;
}

void append_metrics_csv(const fs::path& path, uint64_t step,
                        const LossReport& report, double lr_nerf,
                        double lr_pose) {
  bool fresh = !fs::exists(path);
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot open metrics csv: " + path.string());
  if (fresh) f << "step,l_rgb,l_depth,l_pc,l_rgbs,total,lr_nerf,lr_pose\n";
  f.precision(17);
  f << step << "," << report.l_rgb << "," << report.l_depth << ","
    << report.l_pc << "," << report.l_rgbs << "," << report.total << ","
    << lr_nerf << "," << lr_pose << "\n";
}

}  // namespace npnf
