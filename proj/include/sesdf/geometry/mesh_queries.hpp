#pragma once

#include <optional>
#include <vector>

#include "sesdf/geometry/bvh.hpp"
#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

struct SdfQuery {
  double distance = 0.0;  // negative inside
  Vec3 closest_point = Vec3::Zero();
  int closest_face = -1;
  Vec3 normal = Vec3::Zero();  // unit pseudonormal of the closest feature
  bool sign_reliable = true;   // false when the mesh is not watertight
};

// A mesh bundled with its Bvh and the angle-weighted pseudonormals needed to
// sign distances. Owns its mesh; immutable after construction.
class MeshQueries {
 public:
  explicit MeshQueries(TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }
  const Bvh& bvh() const { return bvh_; }
  bool watertight() const { return watertight_; }
  double bbox_diagonal() const { return diagonal_; }

  // Exact unsigned distance; sign from the pseudonormal of the closest
  // feature, falling back to ray parity when |cos| < 1e-6 or the mesh is open.
  SdfQuery signed_distance(const Vec3& x) const;

  ClosestPoint closest_point(const Vec3& x) const { return bvh_.closest_point(mesh_, x); }

  std::optional<RayHit> ray_nearest_hit(const Vec3& origin, const Vec3& dir, double tmin = 0.0) const {
    return bvh_.ray_nearest_hit(mesh_, origin, dir, tmin);
  }

  // Majority vote over three fixed, non-axis-aligned ray directions.
  bool inside_by_parity(const Vec3& x) const;

  const Vec3& face_normal(int f) const { return face_normals_[f]; }
  const Vec3& vertex_pseudonormal(int v) const { return vertex_pseudonormals_[v]; }

 private:
  Vec3 pseudonormal(const ClosestPoint& cp) const;

  TriangleMesh mesh_;
  Bvh bvh_;
  bool watertight_ = false;
  double diagonal_ = 0.0;
  std::vector<Vec3> face_normals_;
  std::vector<Vec3> vertex_pseudonormals_;
  std::vector<std::array<Vec3, 3>> edge_pseudonormals_;  // per face, per local edge
};

}  // namespace sesdf
