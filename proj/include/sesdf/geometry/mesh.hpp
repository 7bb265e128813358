#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include "sesdf/common.hpp"

namespace sesdf {

using Face = std::array<int, 3>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  Aabb() = default;
  Aabb(const Vec3& lo_, const Vec3& hi_) : lo(lo_), hi(hi_) {}

  bool empty() const { return (hi.array() < lo.array()).any(); }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return empty() ? 0.0 : extent().norm(); }
  double surface_area() const {
    if (empty()) return 0.0;
    const Vec3 e = extent();
    return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  bool contains(const Aabb& b) const { return contains(b.lo) && contains(b.hi); }
  // Squared distance from p to the box (0 inside).
  double distance_squared(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
    return d.squaredNorm();
  }
  // Grows every side by `fraction` of the extent along that axis.
  Aabb inflated(double fraction) const {
    const Vec3 pad = fraction * extent();
    return {lo - pad, hi + pad};
  }
};

// Indexed triangle surface. vertex_normals is empty until computed.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> vertex_normals;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_faces() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  Aabb bounds() const;
  Vec3 face_normal(std::size_t f) const;  // unit; zero for degenerate faces
  double face_area(std::size_t f) const;

  // Throws sesdf::Error if any face index is out of range.
  void validate() const;
};

// Drops faces with area < rel_area * bbox_diagonal^2 (and faces repeating a
// vertex index). Returns the number of dropped faces; warns when non-zero.
std::size_t drop_degenerate_faces(TriangleMesh& mesh, double rel_area = 1e-12);

// Angle-weighted average of incident face normals, normalized. Vertices with
// no incident face get the zero vector and are reported in `isolated`.
std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh,
                                         std::vector<int>* isolated = nullptr);
void update_vertex_normals(TriangleMesh& mesh);

// Every undirected edge is shared by exactly two faces that traverse it in
// opposite directions.
bool is_closed(const TriangleMesh& mesh);
long euler_characteristic(const TriangleMesh& mesh);
double surface_area(const TriangleMesh& mesh);

TriangleMesh concatenate(const TriangleMesh& a, const TriangleMesh& b);
// x -> scale * R x + t, applied to vertices (normals rotated if present).
TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation,
                         double scale = 1.0);
// Removes vertices no face references, remapping indices.
TriangleMesh compacted(const TriangleMesh& mesh);
// Keeps the edge-connected component with the most faces.
TriangleMesh largest_connected_component(const TriangleMesh& mesh);

}  // namespace sesdf
