#include "sesdf/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>

#include "sesdf/util/log.hpp"

namespace sesdf {
namespace {

uint64_t edge_key(int a, int b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

double corner_angle(const Vec3& at, const Vec3& p, const Vec3& q) {
  const Vec3 u = p - at;
  const Vec3 v = q - at;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

}  // namespace

Aabb TriangleMesh::bounds() const {
  Aabb box;
  for (const Vec3& v : vertices) box.extend(v);
  return box;
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const Face& t = faces[f];
  const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t f) const {
  const Face& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      if (faces[f][k] < 0 || faces[f][k] >= n) {
        throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(faces[f][k]) +
                    " but the mesh has " + std::to_string(n) + " vertices");
      }
    }
  }
}

std::size_t drop_degenerate_faces(TriangleMesh& mesh, double rel_area) {
  const double diag = mesh.bounds().diagonal();
  const double min_area = rel_area * diag * diag;
  std::vector<Face> kept;
  kept.reserve(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (mesh.face_area(f) < min_area) continue;
    kept.push_back(t);
  }
  const std::size_t dropped = mesh.faces.size() - kept.size();
  if (dropped > 0) {
    log::warn("dropped " + std::to_string(dropped) + " degenerate face(s)");
    mesh.faces = std::move(kept);
    mesh.vertex_normals.clear();
  }
  return dropped;
}

std::vector<Vec3> compute_vertex_normals(const TriangleMesh& mesh, std::vector<int>* isolated) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    const Vec3 n = mesh.face_normal(f);
    for (int k = 0; k < 3; ++k) {
      const Vec3& at = mesh.vertices[t[k]];
      const double angle = corner_angle(at, mesh.vertices[t[(k + 1) % 3]], mesh.vertices[t[(k + 2) % 3]]);
      normals[t[k]] += angle * n;
    }
  }
  for (std::size_t v = 0; v < normals.size(); ++v) {
    const double len = normals[v].norm();
    if (len > 0.0) {
      normals[v] /= len;
    } else {
      normals[v].setZero();
      if (isolated) isolated->push_back(static_cast<int>(v));
    }
  }
  return normals;
}

void update_vertex_normals(TriangleMesh& mesh) { mesh.vertex_normals = compute_vertex_normals(mesh); }

bool is_closed(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return false;
  std::unordered_map<uint64_t, int> directed;
  directed.reserve(mesh.faces.size() * 3);
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      if (++directed[edge_key(t[k], t[(k + 1) % 3])] > 1) return false;
    }
  }
  for (const auto& [key, count] : directed) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    if (!directed.count(edge_key(b, a))) return false;
  }
  return true;
}

long euler_characteristic(const TriangleMesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  std::unordered_map<uint64_t, char> edges;
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      used[t[k]] = 1;
      const int a = std::min(t[k], t[(k + 1) % 3]);
      const int b = std::max(t[k], t[(k + 1) % 3]);
      edges[edge_key(a, b)] = 1;
    }
  }
  const long v = std::count(used.begin(), used.end(), 1);
  return v - static_cast<long>(edges.size()) + static_cast<long>(mesh.faces.size());
}

double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) area += mesh.face_area(f);
  return area;
}

TriangleMesh concatenate(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh out = a;
  const int offset = static_cast<int>(a.vertices.size());
  out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (const Face& t : b.faces) out.faces.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  if (a.vertex_normals.size() == a.vertices.size() && b.vertex_normals.size() == b.vertices.size()) {
    out.vertex_normals.insert(out.vertex_normals.end(), b.vertex_normals.begin(), b.vertex_normals.end());
  } else {
    out.vertex_normals.clear();
  }
  return out;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Mat3& rotation, const Vec3& translation,
                         double scale) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = scale * (rotation * v) + translation;
  for (Vec3& n : out.vertex_normals) n = rotation * n;
  return out;
}

TriangleMesh compacted(const TriangleMesh& mesh) {
  std::vector<int> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  const bool has_normals = mesh.vertex_normals.size() == mesh.vertices.size();
  for (const Face& t : mesh.faces) {
    Face nt;
    for (int k = 0; k < 3; ++k) {
      int& r = remap[t[k]];
      if (r < 0) {
        r = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[t[k]]);
        if (has_normals) out.vertex_normals.push_back(mesh.vertex_normals[t[k]]);
      }
      nt[k] = r;
    }
    out.faces.push_back(nt);
  }
  return out;
}

TriangleMesh largest_connected_component(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) return mesh;
  // Union-find over vertices; faces joined through shared vertices.
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const Face& t : mesh.faces) {
    const int r0 = find(t[0]);
    for (int k = 1; k < 3; ++k) {
      const int rk = find(t[k]);
      if (rk != r0) parent[rk] = r0;
    }
  }
  std::map<int, std::size_t> face_count;
  for (const Face& t : mesh.faces) ++face_count[find(t[0])];
  int best_root = -1;
  std::size_t best = 0;
  for (const auto& [root, count] : face_count) {
    if (count > best) {
      best = count;
      best_root = root;
    }
  }
  TriangleMesh kept;
  kept.vertices = mesh.vertices;
  if (mesh.vertex_normals.size() == mesh.vertices.size()) kept.vertex_normals = mesh.vertex_normals;
  for (const Face& t : mesh.faces) {
    if (find(t[0]) == best_root) kept.faces.push_back(t);
  }
  return compacted(kept);
}

}  // namespace sesdf
