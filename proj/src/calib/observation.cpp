#include "sesdf/calib/observation.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace sesdf {

int Observation::visible_count() const {
  return static_cast<int>(std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.visible; }));
}

void write_keypoints(const std::vector<Keypoint>& keypoints, const std::vector<std::string>& joint_names,
                     const std::filesystem::path& path) {
  if (keypoints.size() != joint_names.size()) throw Error("write_keypoints: joint name count mismatch");
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < keypoints.size(); ++k) {
    j[joint_names[k]] = {keypoints[k].uv.x(), keypoints[k].uv.y(), keypoints[k].visible ? 1 : 0};
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1);
}

std::vector<Keypoint> read_keypoints(const std::filesystem::path& path, const std::vector<std::string>& joint_names) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<Keypoint> out(joint_names.size());
  try {
    nlohmann::json j;
    in >> j;
    for (const auto& [name, value] : j.items()) {
      const auto it = std::find(joint_names.begin(), joint_names.end(), name);
      if (it == joint_names.end()) throw Error(path.string() + ": unknown joint '" + name + "'");
      Keypoint& k = out[static_cast<std::size_t>(it - joint_names.begin())];
      k.uv = {value.at(0).get<double>(), value.at(1).get<double>()};
      k.visible = value.at(2).get<double>() != 0.0;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return out;
}

Observation load_observation(const std::filesystem::path& view_dir, const std::vector<std::string>& joint_names) {
  Observation obs;
  obs.keypoints = read_keypoints(view_dir / "keypoints.json", joint_names);
  obs.mask = read_pgm(view_dir / "mask.pgm");
  for (const Keypoint& k : obs.keypoints) {
    if (k.visible && (k.uv.x() < 0 || k.uv.y() < 0 || k.uv.x() > obs.mask.width || k.uv.y() > obs.mask.height)) {
      throw Error(view_dir.string() + ": visible keypoint outside the image");
    }
  }
  return obs;
}

void save_observation(const Observation& obs, const std::vector<std::string>& joint_names,
                      const std::filesystem::path& view_dir) {
  std::filesystem::create_directories(view_dir);
  write_keypoints(obs.keypoints, joint_names, view_dir / "keypoints.json");
  write_pgm(obs.mask, view_dir / "mask.pgm");
}

}  // namespace sesdf
