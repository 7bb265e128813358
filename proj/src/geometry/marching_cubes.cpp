#include "sesdf/geometry/marching_cubes.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "sesdf/util/log.hpp"

namespace sesdf {

ScalarGrid::ScalarGrid(std::array<int, 3> dims_, const Aabb& bounds_, double fill)
    : dims(dims_), bounds(bounds_) {
  if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) throw Error("ScalarGrid: every dimension must be >= 2");
  values.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], fill);
}

Vec3 ScalarGrid::spacing() const {
  const Vec3 e = bounds.extent();
  return {e.x() / (dims[0] - 1), e.y() / (dims[1] - 1), e.z() / (dims[2] - 1)};
}

Vec3 ScalarGrid::point(int i, int j, int k) const {
  const Vec3 h = spacing();
  return bounds.lo + Vec3(i * h.x(), j * h.y(), k * h.z());
}

Vec3 ScalarGrid::point(std::size_t flat) const {
  const std::size_t nx = dims[0], ny = dims[1];
  return point(static_cast<int>(flat % nx), static_cast<int>((flat / nx) % ny), static_cast<int>(flat / (nx * ny)));
}

namespace {

Vec3 corner_offset(int c) { return {double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)}; }

std::array<std::array<int, 2>, 12> build_edges() {
  std::array<std::array<int, 2>, 12> edges{};
  int n = 0;
  for (int axis = 0; axis < 3; ++axis) {
    for (int c = 0; c < 8; ++c) {
      if (!(c & (1 << axis))) edges[n++] = {c, c | (1 << axis)};
    }
  }
  return edges;
}

const std::array<std::array<int, 2>, 12>& edges() {
  static const auto table = build_edges();
  return table;
}

int edge_between(int a, int b) {
  const auto& e = edges();
  for (int i = 0; i < 12; ++i) {
    if ((e[i][0] == a && e[i][1] == b) || (e[i][0] == b && e[i][1] == a)) return i;
  }
  return -1;
}

struct CubeFace {
  std::array<int, 4> corners;  // cyclic
  Vec3 normal;                 // outward from the cube
};

std::array<CubeFace, 6> build_faces() {
  std::array<CubeFace, 6> faces{};
  int n = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const int base = side << axis;
      CubeFace f;
      f.corners = {base, base | (1 << u), base | (1 << u) | (1 << v), base | (1 << v)};
      f.normal = Vec3::Zero();
      f.normal[axis] = side ? 1.0 : -1.0;
      faces[n++] = f;
    }
  }
  return faces;
}

// Directed segments on one cube face. With four crossings the inside corners
// are kept apart; the rule depends only on the face's own corner signs, so
// neighbouring cells agree on the shared face.
void face_segments(const CubeFace& face, int config, std::vector<std::array<int, 2>>& out) {
  const auto inside = [&](int c) { return (config >> c) & 1; };
  std::vector<int> crossing;  // local side index k joins corners k, k+1
  for (int k = 0; k < 4; ++k) {
    if (inside(face.corners[k]) != inside(face.corners[(k + 1) % 4])) crossing.push_back(k);
  }
  std::vector<std::array<int, 2>> pairs;
  if (crossing.size() == 2) {
    pairs.push_back({crossing[0], crossing[1]});
  } else if (crossing.size() == 4) {
    for (int k = 0; k < 4; ++k) {
      if (inside(face.corners[k])) pairs.push_back({(k + 3) % 4, k});
    }
  }
  for (const auto& p : pairs) {
    const int ea = edge_between(face.corners[p[0]], face.corners[(p[0] + 1) % 4]);
    const int eb = edge_between(face.corners[p[1]], face.corners[(p[1] + 1) % 4]);
    const Vec3 a = 0.5 * (corner_offset(edges()[ea][0]) + corner_offset(edges()[ea][1]));
    const Vec3 b = 0.5 * (corner_offset(edges()[eb][0]) + corner_offset(edges()[eb][1]));
    const Vec3 side = (b - a).cross(face.normal);
    // The smaller side of the cut holds corners of a single sign.
    int pos = 0, neg = 0, pos_in = 0, neg_in = 0;
    for (int c : face.corners) {
      const double s = side.dot(corner_offset(c) - a);
      if (s > 0) {
        ++pos;
        pos_in += inside(c);
      } else {
        ++neg;
        neg_in += inside(c);
      }
    }
    const bool inside_on_pos = pos <= neg ? pos_in == pos : neg_in == 0;
    out.push_back(inside_on_pos ? std::array<int, 2>{ea, eb} : std::array<int, 2>{eb, ea});
  }
}

std::array<MarchingCase, 256> build_table() {
  std::array<MarchingCase, 256> table{};
  const auto faces = build_faces();
  for (int config = 0; config < 256; ++config) {
    std::vector<std::array<int, 2>> segments;
    for (const CubeFace& f : faces) face_segments(f, config, segments);
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& s : segments) next[s[0]] = s[1];
    std::array<bool, 12> used{};
    for (const auto& s : segments) {
      if (used[s[0]]) continue;
      std::vector<int> loop;
      for (int e = s[0]; !used[e]; e = next[e]) {
        used[e] = true;
        loop.push_back(e);
      }
      table[config].loops.push_back(std::move(loop));
    }
  }
  return table;
}

}  // namespace

const std::array<MarchingCase, 256>& marching_cubes_table() {
  static const auto table = build_table();
  return table;
}

const std::array<int, 2>& marching_cube_edge(int e) { return edges()[e]; }

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
  TriangleMesh mesh;
  const auto [lo_it, hi_it] = std::minmax_element(grid.values.begin(), grid.values.end());
  if (grid.values.empty() || !(*lo_it <= iso && iso < *hi_it)) {
    log::warn("marching_cubes: iso level " + std::to_string(iso) + " outside the grid value range");
    return mesh;
  }
  const auto& table = marching_cubes_table();
  const auto& edge_table = edges();
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  std::unordered_map<std::size_t, int> edge_vertex;
  edge_vertex.reserve(grid.size() / 8);

  const auto vertex_on = [&](int i, int j, int k, int e) {
    const auto& ce = edge_table[e];
    const int a = ce[0], b = ce[1];
    const int ia = i + (a & 1), ja = j + ((a >> 1) & 1), ka = k + ((a >> 2) & 1);
    const int axis = (a ^ b) == 1 ? 0 : ((a ^ b) == 2 ? 1 : 2);
    const std::size_t key = grid.index(ia, ja, ka) * 3 + axis;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const int ib = i + (b & 1), jb = j + ((b >> 1) & 1), kb = k + ((b >> 2) & 1);
    const double va = grid.at(ia, ja, ka), vb = grid.at(ib, jb, kb);
    const double t = std::clamp((iso - va) / (vb - va), 0.0, 1.0);
    const Vec3 p = (1.0 - t) * grid.point(ia, ja, ka) + t * grid.point(ib, jb, kb);
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    edge_vertex.emplace(key, id);
    return id;
  };

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        int config = 0;
        for (int c = 0; c < 8; ++c) {
          if (grid.at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)) > iso) config |= 1 << c;
        }
        if (config == 0 || config == 255) continue;
        for (const auto& loop : table[config].loops) {
          int ids[12];
          for (std::size_t n = 0; n < loop.size(); ++n) ids[n] = vertex_on(i, j, k, loop[n]);
          for (std::size_t n = 1; n + 1 < loop.size(); ++n) mesh.faces.push_back({ids[0], ids[n], ids[n + 1]});
        }
      }
    }
  }
  return mesh;
}

}  // namespace sesdf
