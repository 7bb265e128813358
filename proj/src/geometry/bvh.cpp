#include "sesdf/geometry/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sesdf {
namespace {

struct BuildItem {
  Aabb box;
  Vec3 centroid;
};

// Slab test; returns the entry distance or +inf on a miss.
double ray_box_entry(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double tmin, double tmax) {
  double t0 = tmin;
  double t1 = tmax;
  for (int k = 0; k < 3; ++k) {
    double ta = (box.lo[k] - origin[k]) * inv_dir[k];
    double tb = (box.hi[k] - origin[k]) * inv_dir[k];
    if (std::isnan(ta) || std::isnan(tb)) {
      // Ray parallel to the slab and origin on its boundary plane.
      if (origin[k] < box.lo[k] || origin[k] > box.hi[k]) return std::numeric_limits<double>::infinity();
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

class Builder {
 public:
  Builder(std::vector<BvhNode>& nodes, std::vector<int>& prims, const std::vector<BuildItem>& items)
      : nodes_(nodes), prims_(prims), items_(items) {}

  int build(int first, int count) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    Aabb centroids;
    for (int i = first; i < first + count; ++i) {
      box.extend(items_[prims_[i]].box);
      centroids.extend(items_[prims_[i]].centroid);
    }
    nodes_[id].box = box;
    if (count <= Bvh::kMaxLeafSize) {
      nodes_[id].first = first;
      nodes_[id].count = count;
      return id;
    }

    const int mid = split(first, count, centroids);
    const int left = build(first, mid - first);
    const int right = build(mid, first + count - mid);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

 private:
  // Binned SAH over the widest-spread centroid axes; falls back to a median
  // split when the centroids coincide.
  int split(int first, int count, const Aabb& centroids) {
    const Vec3 extent = centroids.extent();
    double best_cost = std::numeric_limits<double>::infinity();
    int best_axis = -1;
    int best_bin = -1;
    for (int axis = 0; axis < 3; ++axis) {
      if (!(extent[axis] > 0.0)) continue;
      std::array<Aabb, Bvh::kBins> bin_box;
      std::array<int, Bvh::kBins> bin_count{};
      const double scale = Bvh::kBins / extent[axis];
      for (int i = first; i < first + count; ++i) {
        const BuildItem& it = items_[prims_[i]];
        const int b = std::min(Bvh::kBins - 1, static_cast<int>((it.centroid[axis] - centroids.lo[axis]) * scale));
        bin_box[b].extend(it.box);
        ++bin_count[b];
      }
      std::array<double, Bvh::kBins> right_area{};
      std::array<int, Bvh::kBins> right_count{};
      Aabb acc;
      int n = 0;
      for (int b = Bvh::kBins - 1; b > 0; --b) {
        acc.extend(bin_box[b]);
        n += bin_count[b];
        right_area[b] = acc.surface_area();
        right_count[b] = n;
      }
      acc = Aabb();
      n = 0;
      for (int b = 0; b < Bvh::kBins - 1; ++b) {
        acc.extend(bin_box[b]);
        n += bin_count[b];
        if (n == 0 || right_count[b + 1] == 0) continue;
        const double cost = n * acc.surface_area() + right_count[b + 1] * right_area[b + 1];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_bin = b;
        }
      }
    }

    auto begin = prims_.begin() + first;
    auto end = begin + count;
    if (best_axis >= 0) {
      const double scale = Bvh::kBins / extent[best_axis];
      const double lo = centroids.lo[best_axis];
      auto pivot = std::partition(begin, end, [&](int p) {
        const int b = std::min(Bvh::kBins - 1, static_cast<int>((items_[p].centroid[best_axis] - lo) * scale));
        return b <= best_bin;
      });
      const int mid = static_cast<int>(pivot - prims_.begin());
      if (mid > first && mid < first + count) return mid;
    }
    // Median split on the widest axis (stable on index for coincident centroids).
    int axis = 0;
    if (extent.y() > extent[axis]) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const int mid = first + count / 2;
    std::nth_element(begin, prims_.begin() + mid, end, [&](int p, int q) {
      const double cp = items_[p].centroid[axis];
      const double cq = items_[q].centroid[axis];
      return cp < cq || (cp == cq && p < q);
    });
    return mid;
  }

  std::vector<BvhNode>& nodes_;
  std::vector<int>& prims_;
  const std::vector<BuildItem>& items_;
};

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw Error("Bvh: cannot build over an empty mesh");
  mesh.validate();
  std::vector<BuildItem> items(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) items[f].box.extend(mesh.vertices[mesh.faces[f][k]]);
    items[f].centroid = items[f].box.center();
  }
  primitives_.resize(mesh.faces.size());
  for (std::size_t f = 0; f < primitives_.size(); ++f) primitives_[f] = static_cast<int>(f);
  nodes_.reserve(2 * mesh.faces.size());
  Builder(nodes_, primitives_, items).build(0, static_cast<int>(mesh.faces.size()));
}

ClosestPoint Bvh::closest_point(const TriangleMesh& mesh, const Vec3& x) const {
  ClosestPoint best;
  int stack[256];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = nodes_[stack[--top]];
    if (node.box.distance_squared(x) > best.distance_squared) continue;
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = primitives_[i];
        const Face& t = mesh.faces[f];
        const TrianglePoint tp =
            closest_point_on_triangle(x, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        const double d2 = (tp.point - x).squaredNorm();
        if (d2 < best.distance_squared || (d2 == best.distance_squared && f < best.face)) {
          best = {tp.point, f, d2, tp.region, tp.barycentric};
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.distance_squared(x);
    const double dr = nodes_[node.right].box.distance_squared(x);
    // Push the farther child first so the nearer one is popped next.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

std::optional<RayHit> Bvh::ray_nearest_hit(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir,
                                           double tmin, double tmax) const {
  const Vec3 inv_dir = dir.cwiseInverse();
  double best_t = tmax;
  int best_face = -1;
  int stack[256];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = nodes_[stack[--top]];
    if (ray_box_entry(node.box, origin, inv_dir, tmin, best_t) == std::numeric_limits<double>::infinity()) {
      continue;
    }
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = primitives_[i];
        const Face& t = mesh.faces[f];
        const auto hit = intersect_ray_triangle(origin, dir, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                mesh.vertices[t[2]], tmin, best_t);
        if (hit && (hit->t < best_t || best_face < 0 || (hit->t == best_t && f < best_face))) {
          best_t = hit->t;
          best_face = f;
        }
      }
      continue;
    }
    const double tl = ray_box_entry(nodes_[node.left].box, origin, inv_dir, tmin, best_t);
    const double tr = ray_box_entry(nodes_[node.right].box, origin, inv_dir, tmin, best_t);
    if (tl <= tr) {
      if (tr != std::numeric_limits<double>::infinity()) stack[top++] = node.right;
      if (tl != std::numeric_limits<double>::infinity()) stack[top++] = node.left;
    } else {
      if (tl != std::numeric_limits<double>::infinity()) stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  if (best_face < 0) return std::nullopt;
  return RayHit{best_t, best_face, origin + best_t * dir};
}

int Bvh::count_ray_hits(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir, double tmin) const {
  const Vec3 inv_dir = dir.cwiseInverse();
  const double tmax = std::numeric_limits<double>::infinity();
  int hits = 0;
  int stack[256];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = nodes_[stack[--top]];
    if (ray_box_entry(node.box, origin, inv_dir, tmin, tmax) == tmax) continue;
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const Face& t = mesh.faces[primitives_[i]];
        if (intersect_ray_triangle(origin, dir, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]],
                                   tmin, tmax)) {
          ++hits;
        }
      }
      continue;
    }
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
  return hits;
}

}  // namespace sesdf
