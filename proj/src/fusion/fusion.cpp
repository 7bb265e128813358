#include "sesdf/fusion/fusion.hpp"

#include <cmath>

namespace sesdf {

FusionMode fusion_mode_from_string(const std::string& name) {
  if (name == "occlusion") return FusionMode::kOcclusion;
  if (name == "average") return FusionMode::kAverage;
  if (name == "normal") return FusionMode::kNormal;
  if (name == "visibility") return FusionMode::kVisibility;
  throw Error("unknown fusion mode '" + name + "' (occlusion|average|normal|visibility)");
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kOcclusion: return "occlusion";
    case FusionMode::kAverage: return "average";
    case FusionMode::kNormal: return "normal";
    case FusionMode::kVisibility: return "visibility";
  }
  return "?";
}

double occlusion_weight(const Vec3& x, const ViewRig& rig, const MeshQueries& body, double eps) {
  const Vec3 dir = rig.forward();
  const Aabb box = body.mesh().bounds();
  // Start in front of everything so the first hit is the one nearest the image.
  const double back = (x - box.center()).norm() + box.diagonal() + 1.0;
  const auto hit = body.ray_nearest_hit(x - back * dir, dir);
  if (!hit) return 1.0 / eps;
  const double dz = rig.to_camera(x).z() - rig.to_camera(hit->point).z();
  return 1.0 / std::max(std::abs(dz), eps);
}

double normal_weight(const Vec3& vn, const Vec3& vd) {
  const double a = vn.norm(), b = vd.norm();
  if (a == 0.0 || b == 0.0) return 0.0;
  const double c = std::clamp(vn.dot(vd) / (a * b), -1.0, 1.0);
  return std::tanh(std::acos(c));
}

bool vertex_visible(const MeshQueries& body, int vertex, const ViewRig& rig) {
  const Vec3& p = body.mesh().vertices[vertex];
  return !body.ray_nearest_hit(p, -rig.forward(), 1e-6 * body.bbox_diagonal()).has_value();
}

PointTuple fuse_tuples(const std::vector<PointTuple>& tuples, const std::vector<double>& weights) {
  if (tuples.empty()) throw Error("fusion: empty view set");
  if (weights.size() != tuples.size()) throw Error("fusion: one weight per view required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("fusion: weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("fusion: weights sum to zero");
  PointTuple f;
  f.view = -1;
  f.space_channels = tuples[0].space_channels;
  f.space = tuples[0].space;
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    const double w = weights[i] / total;
    const PointTuple& t = tuples[i];
    for (int c = 0; c < kImageChannels; ++c) f.image[c] += w * t.image[c];
    if (i > 0) {
      for (int c = 0; c < f.space_channels; ++c) f.space[c] += w * (t.space[c] - tuples[0].space[c]);
    }
    f.d += w * t.d;
    f.n += w * t.n;
    f.z += w * t.z;
    f.uv += w * t.uv;
  }
  // The space block starts from view 0 and accumulates differences, so
  // identical blocks (the usual case) come out bit-exact.
  return f;
}

namespace {
std::vector<double> normalized(std::vector<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  for (double& v : w) v /= s;
  return w;
}
}  // namespace

FusionResult fuse_average(const std::vector<PointTuple>& tuples) {
  FusionResult r;
  r.weights.assign(tuples.size(), 1.0 / static_cast<double>(tuples.size()));
  r.tuple = fuse_tuples(tuples, r.weights);
  return r;
}

FusionResult fuse_occlusion_aware(const std::vector<PointTuple>& tuples, const std::vector<double>& raw_weights) {
  FusionResult r;
  r.tuple = fuse_tuples(tuples, raw_weights);
  r.weights = normalized(raw_weights);
  return r;
}

std::vector<double> fusion_weights(FusionMode mode, const FusionContext& ctx, const Vec3& x, bool* fallback) {
  const std::vector<ViewRig>& rigs = *ctx.rigs;
  const std::size_t n = rigs.size();
  if (n == 0) throw Error("fusion: empty view set");
  if (fallback) *fallback = false;
  std::vector<double> w(n, 1.0);
  switch (mode) {
    case FusionMode::kAverage:
      break;
    case FusionMode::kOcclusion: {
      const MeshQueries& q = ctx.body->queries();
      const double eps = occlusion_epsilon(q);
      for (std::size_t i = 0; i < n; ++i) w[i] = occlusion_weight(x, rigs[i], q, eps);
      break;
    }
    case FusionMode::kNormal: {
      const int v = ctx.vertices->nearest(x);
      const Vec3& vn = ctx.body->vertex_normals()[v];
      for (std::size_t i = 0; i < n; ++i) w[i] = normal_weight(vn, rigs[i].forward());
      break;
    }
    case FusionMode::kVisibility: {
      const int v = ctx.vertices->nearest(x);
      for (std::size_t i = 0; i < n; ++i) w[i] = vertex_visible(ctx.body->queries(), v, rigs[i]) ? 1.0 : 0.0;
      break;
    }
  }
  double s = 0.0;
  for (double v : w) s += v;
  if (!(s > 0.0)) {
    if (fallback) *fallback = true;
    std::fill(w.begin(), w.end(), 1.0);
    s = static_cast<double>(n);
  }
  for (double& v : w) v /= s;
  return w;
}

FusionResult fuse(FusionMode mode, const FusionContext& ctx, const Vec3& x, const std::vector<PointTuple>& tuples) {
  FusionResult r;
  r.weights = fusion_weights(mode, ctx, x, &r.fallback);
  r.tuple = fuse_tuples(tuples, r.weights);
  return r;
}

}  // namespace sesdf
