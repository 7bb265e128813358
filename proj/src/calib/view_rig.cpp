#include "sesdf/calib/view_rig.hpp"

#include <cmath>

namespace sesdf {

void ViewRig::check() const {
  if (!(ortho_scale > 0.0) || !std::isfinite(ortho_scale)) throw Error("view rig: ortho_scale must be positive");
  if (width <= 0 || height <= 0) throw Error("view rig: image size must be positive");
  if ((rotation.transpose() * rotation - Mat3::Identity()).norm() > 1e-6 || rotation.determinant() < 0.0) {
    throw Error("view rig: rotation is not orthonormal with det +1");
  }
  if (!translation.allFinite()) throw Error("view rig: non-finite translation");
}

Projection project_orthographic(const ViewRig& rig, const Vec3& x) {
  const Vec3 c = rig.to_camera(x);
  return {rig.ortho_scale * c.head<2>() + rig.center(), c.z()};
}

Vec3 unproject(const ViewRig& rig, const Vec2& uv, double z) {
  const Vec2 xy = (uv - rig.center()) / rig.ortho_scale;
  return rig.rotation.transpose() * (Vec3(xy.x(), xy.y(), z) - rig.translation);
}

nlohmann::json rig_to_json(const ViewRig& rig) {
  nlohmann::json j;
  j["rotation"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) j["rotation"].push_back({rig.rotation(r, 0), rig.rotation(r, 1), rig.rotation(r, 2)});
  j["translation"] = {rig.translation.x(), rig.translation.y(), rig.translation.z()};
  j["ortho_scale"] = rig.ortho_scale;
  j["image_size"] = {rig.width, rig.height};
  return j;
}

ViewRig rig_from_json(const nlohmann::json& j) {
  ViewRig rig;
  try {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rig.rotation(r, c) = j.at("rotation").at(r).at(c).get<double>();
    }
    for (int a = 0; a < 3; ++a) rig.translation[a] = j.at("translation").at(a).get<double>();
    rig.ortho_scale = j.at("ortho_scale").get<double>();
    rig.width = j.at("image_size").at(0).get<int>();
    rig.height = j.at("image_size").at(1).get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("view rig: ") + e.what());
  }
  rig.check();
  return rig;
}

}  // namespace sesdf
