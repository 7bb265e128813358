#pragma once

// Independent reference implementations used only by tests: linear scans
// instead of the Bvh, and generators for random watertight meshes.

#include <cstdint>
#include <optional>

#include "sesdf/geometry/bvh.hpp"
#include "sesdf/geometry/mesh.hpp"

namespace sesdf::oracle {

ClosestPoint brute_force_closest(const TriangleMesh& mesh, const Vec3& x);

std::optional<RayHit> brute_force_ray(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                                      double tmin = 0.0);

// Inside test by counting crossings along +x with a jittered direction over
// every face (no acceleration structure).
bool brute_force_inside(const TriangleMesh& mesh, const Vec3& x);

// Star-shaped watertight mesh: icosphere with smooth random radial bumps.
TriangleMesh random_star_mesh(uint64_t seed, int subdivisions = 3);

}  // namespace sesdf::oracle
