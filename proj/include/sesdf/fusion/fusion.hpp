#pragma once

#include <string>
#include <vector>

#include "sesdf/features/assemble.hpp"
#include "sesdf/geometry/vertex_index.hpp"

namespace sesdf {

enum class FusionMode { kOcclusion, kAverage, kNormal, kVisibility };

FusionMode fusion_mode_from_string(const std::string& name);
std::string to_string(FusionMode mode);

// Depth-gap floor used by the occlusion weights.
inline double occlusion_epsilon(const MeshQueries& body) { return 1e-3 * body.bbox_diagonal(); }

// 1 / max(|Z(x) - Z(x')|, eps) where x' is the body's first hit along the
// view ray through x (minimal camera depth). A ray that misses the body
// counts as fully visible (weight 1/eps).
double occlusion_weight(const Vec3& x, const ViewRig& rig, const MeshQueries& body, double eps);

// tanh(angle between v_n and v_d); 0 when either vector is zero.
double normal_weight(const Vec3& vn, const Vec3& vd);

// True when the ray from the body vertex towards the image meets no body
// face (the vertex's own faces are skipped by a small offset).
bool vertex_visible(const MeshQueries& body, int vertex, const ViewRig& rig);

struct FusionResult {
  PointTuple tuple;             // view = -1
  std::vector<double> weights;  // normalized, one per view
  bool fallback = false;        // no view qualified; uniform average used
};

// Convex combination of every numeric component. Weights must be
// non-negative; they are normalized here.
PointTuple fuse_tuples(const std::vector<PointTuple>& tuples, const std::vector<double>& weights);

FusionResult fuse_average(const std::vector<PointTuple>& tuples);
FusionResult fuse_occlusion_aware(const std::vector<PointTuple>& tuples, const std::vector<double>& raw_weights);

// Everything the strategies need to weight one point's views.
struct FusionContext {
  const BodyContext* body = nullptr;
  const VertexIndex* vertices = nullptr;  // over the body vertices
  const std::vector<ViewRig>* rigs = nullptr;
};

// Normalized per-view weights of a strategy at x (n = rigs.size()). For the
// visibility strategy `fallback` reports that no view saw the nearest vertex.
std::vector<double> fusion_weights(FusionMode mode, const FusionContext& ctx, const Vec3& x,
                                   bool* fallback = nullptr);

FusionResult fuse(FusionMode mode, const FusionContext& ctx, const Vec3& x, const std::vector<PointTuple>& tuples);

}  // namespace sesdf
