#pragma once

#include <vector>

#include "sesdf/common.hpp"

namespace sesdf {

// Static kd-tree over a point set for exact nearest-neighbour lookup.
class VertexIndex {
 public:
  explicit VertexIndex(std::vector<Vec3> points);

  // Index of the nearest point (smallest index on ties); -1 when empty.
  int nearest(const Vec3& x) const;
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& ids, int begin, int end, int depth);

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace sesdf
