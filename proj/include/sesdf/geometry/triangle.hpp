#pragma once

#include <optional>

#include "sesdf/common.hpp"

namespace sesdf {

// Which feature of a triangle a closest point lies on. Edge k joins local
// vertices k and (k+1)%3.
enum class TriangleRegion { kFace, kEdge0, kEdge1, kEdge2, kVertex0, kVertex1, kVertex2 };

struct TrianglePoint {
  Vec3 point;
  Vec3 barycentric;  // weights of a, b, c
  TriangleRegion region = TriangleRegion::kFace;
};

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct TriangleHit {
  double t;
  Vec3 barycentric;
};

// Watertight ray/triangle test (shear + scale to ray space, edge functions
// evaluated with a consistent tie rule so shared edges never leak rays).
// Hits are accepted for t in [tmin, tmax]; both faces' orientations count.
std::optional<TriangleHit> intersect_ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                                  const Vec3& b, const Vec3& c, double tmin,
                                                  double tmax);

}  // namespace sesdf
