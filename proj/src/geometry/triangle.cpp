#include "sesdf/geometry/triangle.hpp"

#include <cmath>
#include <utility>

namespace sesdf {

TrianglePoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, {1, 0, 0}, TriangleRegion::kVertex0};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, {0, 1, 0}, TriangleRegion::kVertex1};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, {1 - v, v, 0}, TriangleRegion::kEdge0};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, {0, 0, 1}, TriangleRegion::kVertex2};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, {1 - w, 0, w}, TriangleRegion::kEdge2};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), {0, 1 - w, w}, TriangleRegion::kEdge1};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, {1 - v - w, v, w}, TriangleRegion::kFace};
}

std::optional<TriangleHit> intersect_ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                                  const Vec3& b, const Vec3& c, double tmin,
                                                  double tmax) {
  // Woop, Benthin, Wald 2013.
  int kz = 0;
  if (std::abs(dir.y()) > std::abs(dir[kz])) kz = 1;
  if (std::abs(dir.z()) > std::abs(dir[kz])) kz = 2;
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (dir[kz] < 0.0) std::swap(kx, ky);
  if (dir[kz] == 0.0) return std::nullopt;

  const double sx = dir[kx] / dir[kz];
  const double sy = dir[ky] / dir[kz];
  const double sz = 1.0 / dir[kz];

  const Vec3 A = a - origin;
  const Vec3 B = b - origin;
  const Vec3 C = c - origin;
  const double ax = A[kx] - sx * A[kz];
  const double ay = A[ky] - sy * A[kz];
  const double bx = B[kx] - sx * B[kz];
  const double by = B[ky] - sy * B[kz];
  const double cx = C[kx] - sx * C[kz];
  const double cy = C[ky] - sy * C[kz];

  double u = cx * by - cy * bx;
  double v = ax * cy - ay * cx;
  double w = bx * ay - by * ax;
  if (u == 0.0 || v == 0.0 || w == 0.0) {
    // Recompute edge functions in extended precision on exact ties.
    u = static_cast<double>(static_cast<long double>(cx) * by - static_cast<long double>(cy) * bx);
    v = static_cast<double>(static_cast<long double>(ax) * cy - static_cast<long double>(ay) * cx);
    w = static_cast<double>(static_cast<long double>(bx) * ay - static_cast<long double>(by) * ax);
  }
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;

  const double az = sz * A[kz];
  const double bz = sz * B[kz];
  const double cz = sz * C[kz];
  const double t = (u * az + v * bz + w * cz) / det;
  if (!(t >= tmin && t <= tmax)) return std::nullopt;
  return TriangleHit{t, Vec3(u, v, w) / det};
}

}  // namespace sesdf
