#pragma once

#include "json.hpp"
#include "sesdf/common.hpp"

namespace sesdf {

// Orthographic camera: camera-frame point c = R x + T, pixel
// (u, v) = ortho_scale * c.xy + image centre, depth Z = c.z. The camera looks
// along +z, so smaller Z is closer to the image.
struct ViewRig {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double ortho_scale = 1.0;
  int width = 512;
  int height = 512;

  Vec2 center() const { return {0.5 * width, 0.5 * height}; }
  Vec3 to_camera(const Vec3& x) const { return rotation * x + translation; }
  Vec3 forward() const { return rotation.transpose().col(2); }  // world-space view direction
  void check() const;
};

struct Projection {
  Vec2 uv;
  double depth;
};

Projection project_orthographic(const ViewRig& rig, const Vec3& x);

// World-space point on the ray through pixel coordinates (u, v) at camera
// depth z; the ray direction is rig.forward().
Vec3 unproject(const ViewRig& rig, const Vec2& uv, double z);

nlohmann::json rig_to_json(const ViewRig& rig);
ViewRig rig_from_json(const nlohmann::json& j);

}  // namespace sesdf
