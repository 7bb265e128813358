#pragma once

#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

// Axis-aligned box, 8 vertices / 12 outward-facing triangles.
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
inline TriangleMesh make_cube(double half = 1.0) {
  return make_box(Vec3::Constant(-half), Vec3::Constant(half));
}

// Subdivided icosahedron with vertices projected onto the sphere;
// 20 * 4^subdivisions faces (3 -> 1280).
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());

// Flat z=0 grid over [-1,1]^2 with n x n quads, normals facing +z.
TriangleMesh make_plane(int n);

}  // namespace sesdf
