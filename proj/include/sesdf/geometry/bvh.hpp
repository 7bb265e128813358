#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "sesdf/geometry/mesh.hpp"
#include "sesdf/geometry/triangle.hpp"

namespace sesdf {

struct BvhNode {
  Aabb box;
  int left = -1;   // internal: child indices
  int right = -1;
  int first = 0;   // leaf: range into Bvh::primitives()
  int count = 0;
  bool is_leaf() const { return count > 0; }
};

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  int face = -1;
  double distance_squared = std::numeric_limits<double>::infinity();
  TriangleRegion region = TriangleRegion::kFace;
  Vec3 barycentric = Vec3::Zero();
};

struct RayHit {
  double t = 0.0;
  int face = -1;
  Vec3 point = Vec3::Zero();
};

// Binned-SAH bounding volume hierarchy over a mesh's faces. The Bvh does not
// own the mesh; every query takes the mesh it was built from. Immutable after
// construction, so concurrent queries are safe.
//
// Ties are broken toward the smaller face index, which makes query results
// independent of traversal order (and therefore equal to a linear scan).
class Bvh {
 public:
  static constexpr int kMaxLeafSize = 4;
  static constexpr int kBins = 16;

  explicit Bvh(const TriangleMesh& mesh);

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  const std::vector<int>& primitives() const { return primitives_; }
  const Aabb& bounds() const { return nodes_.front().box; }

  ClosestPoint closest_point(const TriangleMesh& mesh, const Vec3& x) const;

  std::optional<RayHit> ray_nearest_hit(const TriangleMesh& mesh, const Vec3& origin,
                                        const Vec3& dir, double tmin = 0.0,
                                        double tmax = std::numeric_limits<double>::infinity()) const;

  // Number of faces the ray crosses at t > tmin.
  int count_ray_hits(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                     double tmin = 0.0) const;

 private:
  std::vector<BvhNode> nodes_;
  std::vector<int> primitives_;
};

}  // namespace sesdf
