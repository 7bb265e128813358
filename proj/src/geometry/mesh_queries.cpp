#include "sesdf/geometry/mesh_queries.hpp"

#include <cmath>
#include <unordered_map>

#include "sesdf/util/log.hpp"

namespace sesdf {
namespace {

constexpr double kParityThreshold = 1e-6;

uint64_t undirected_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

Vec3 safe_normalized(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec3(v / n) : Vec3::Zero();
}

}  // namespace

MeshQueries::MeshQueries(TriangleMesh mesh) : mesh_(std::move(mesh)), bvh_(mesh_) {
  watertight_ = is_closed(mesh_);
  diagonal_ = mesh_.bounds().diagonal();
  if (!watertight_) log::warn("mesh is not watertight; inside tests fall back to ray parity");

  const std::size_t nf = mesh_.faces.size();
  face_normals_.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) face_normals_[f] = mesh_.face_normal(f);

  vertex_pseudonormals_.assign(mesh_.vertices.size(), Vec3::Zero());
  std::unordered_map<uint64_t, Vec3> edge_sum;
  edge_sum.reserve(nf * 2);
  for (std::size_t f = 0; f < nf; ++f) {
    const Face& t = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) {
      const Vec3& at = mesh_.vertices[t[k]];
      const Vec3 u = mesh_.vertices[t[(k + 1) % 3]] - at;
      const Vec3 v = mesh_.vertices[t[(k + 2) % 3]] - at;
      const double angle = std::atan2(u.cross(v).norm(), u.dot(v));
      vertex_pseudonormals_[t[k]] += angle * face_normals_[f];
      edge_sum[undirected_key(t[k], t[(k + 1) % 3])] += face_normals_[f];
    }
  }
  for (Vec3& n : vertex_pseudonormals_) n = safe_normalized(n);
  edge_pseudonormals_.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const Face& t = mesh_.faces[f];
    for (int k = 0; k < 3; ++k) {
      edge_pseudonormals_[f][k] = safe_normalized(edge_sum[undirected_key(t[k], t[(k + 1) % 3])]);
    }
  }
}

Vec3 MeshQueries::pseudonormal(const ClosestPoint& cp) const {
  const Face& t = mesh_.faces[cp.face];
  switch (cp.region) {
    case TriangleRegion::kFace: return face_normals_[cp.face];
    case TriangleRegion::kEdge0: return edge_pseudonormals_[cp.face][0];
    case TriangleRegion::kEdge1: return edge_pseudonormals_[cp.face][1];
    case TriangleRegion::kEdge2: return edge_pseudonormals_[cp.face][2];
    case TriangleRegion::kVertex0: return vertex_pseudonormals_[t[0]];
    case TriangleRegion::kVertex1: return vertex_pseudonormals_[t[1]];
    case TriangleRegion::kVertex2: return vertex_pseudonormals_[t[2]];
  }
  return face_normals_[cp.face];
}

SdfQuery MeshQueries::signed_distance(const Vec3& x) const {
  const ClosestPoint cp = bvh_.closest_point(mesh_, x);
  SdfQuery q;
  q.closest_point = cp.point;
  q.closest_face = cp.face;
  q.normal = pseudonormal(cp);
  q.sign_reliable = watertight_;
  const double dist = std::sqrt(cp.distance_squared);
  if (dist == 0.0) {
    q.distance = 0.0;
    return q;
  }
  bool inside = false;
  const double cosine = ((x - cp.point) / dist).dot(q.normal);
  if (!watertight_ || std::abs(cosine) < kParityThreshold) {
    inside = inside_by_parity(x);
  } else {
    inside = cosine < 0.0;
  }
  q.distance = inside ? -dist : dist;
  return q;
}

bool MeshQueries::inside_by_parity(const Vec3& x) const {
  static const Vec3 kDirs[3] = {Vec3(0.5773, 0.5774, 0.5775).normalized(),
                                Vec3(-0.3137, 0.8412, -0.4404).normalized(),
                                Vec3(0.2711, -0.4321, 0.8602).normalized()};
  int votes = 0;
  for (const Vec3& d : kDirs) votes += bvh_.count_ray_hits(mesh_, x, d, 0.0) % 2;
  return votes >= 2;
}

}  // namespace sesdf
