#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sesdf/calib/raster.hpp"

namespace sesdf {

struct Keypoint {
  Vec2 uv = Vec2::Zero();
  bool visible = false;
};

struct Observation {
  std::vector<Keypoint> keypoints;  // one per model joint
  Mask mask;

  int visible_count() const;
};

// keypoints.json: {"joint_name": [u, v, visible], ...}. Joints missing from
// the file are invisible; unknown names are rejected.
void write_keypoints(const std::vector<Keypoint>& keypoints, const std::vector<std::string>& joint_names,
                     const std::filesystem::path& path);
std::vector<Keypoint> read_keypoints(const std::filesystem::path& path, const std::vector<std::string>& joint_names);

// Reads view_dir/keypoints.json and view_dir/mask.pgm.
Observation load_observation(const std::filesystem::path& view_dir, const std::vector<std::string>& joint_names);
void save_observation(const Observation& obs, const std::vector<std::string>& joint_names,
                      const std::filesystem::path& view_dir);

}  // namespace sesdf
