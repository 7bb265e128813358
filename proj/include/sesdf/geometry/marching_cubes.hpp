#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

// Scalar samples on a regular lattice spanning `bounds` (corners included).
// Values are stored x-fastest.
struct ScalarGrid {
  std::array<int, 3> dims{0, 0, 0};
  Aabb bounds;
  std::vector<double> values;

  ScalarGrid() = default;
  ScalarGrid(std::array<int, 3> dims_, const Aabb& bounds_, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 spacing() const;
  Vec3 point(int i, int j, int k) const;
  Vec3 point(std::size_t flat) const;
};

// Cell-corner sign configuration -> polygon loops over cube edges. Loops are
// ordered so that their right-handed normal points from inside (value > iso)
// to outside.
struct MarchingCase {
  std::vector<std::vector<int>> loops;
};
const std::array<MarchingCase, 256>& marching_cubes_table();

// Cube corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1); edge e
// joins corners marching_cube_edge(e)[0] and [1].
const std::array<int, 2>& marching_cube_edge(int e);

// Iso-surface of `grid` at `iso`, inside meaning value > iso. Vertices on
// shared lattice edges are welded, so the result is closed wherever the
// surface does not reach the lattice boundary.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso);

}  // namespace sesdf
