#include "sesdf/geometry/vertex_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace sesdf {

VertexIndex::VertexIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  std::vector<int> ids(points_.size());
  std::iota(ids.begin(), ids.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(ids, 0, static_cast<int>(ids.size()), 0);
}

int VertexIndex::build(std::vector<int>& ids, int begin, int end, int depth) {
  if (begin >= end) return -1;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[ids[i]]);
    hi = hi.cwiseMax(points_[ids[i]]);
  }
  int axis = 0;
  const Vec3 ext = hi - lo;
  if (ext.y() > ext[axis]) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  const int mid = (begin + end) / 2;
  std::nth_element(ids.begin() + begin, ids.begin() + mid, ids.begin() + end, [&](int a, int b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({ids[mid], axis, -1, -1});
  const int left = build(ids, begin, mid, depth + 1);
  const int right = build(ids, mid + 1, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

int VertexIndex::nearest(const Vec3& x) const {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  int stack[256];
  int top = 0;
  if (root_ >= 0) stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    const Vec3& p = points_[node.point];
    const double d2 = (p - x).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && node.point < best)) {
      best_d2 = d2;
      best = node.point;
    }
    const double delta = x[node.axis] - p[node.axis];
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    // Far side is pushed first and re-checked against the plane distance.
    if (far >= 0 && delta * delta <= best_d2) stack[top++] = far;
    if (near >= 0) stack[top++] = near;
  }
  return best;
}

}  // namespace sesdf
