#pragma once

#include <functional>
#include <vector>

#include "sesdf/features/assemble.hpp"
#include "sesdf/nn/model.hpp"
#include "sesdf/sampling/sampling.hpp"

namespace sesdf {

// Writes one weight per view for x.
using ViewWeightFn = std::function<void(const Vec3& x, double* weights)>;

// Raw per-view inputs for each point. Without a weight function the views
// are weighted uniformly.
PointBatch gather_points(const BodyContext& body, const std::vector<ViewInput>& views, const std::vector<Vec3>& points,
                         const ViewWeightFn& weights = {});

// Training records of one scene over all of its views. The occupancy batch's
// `weight` holds raw occlusion scores (not normalized) so that any subset of
// views can be renormalized later.
struct SceneSamples {
  PointBatch surface;
  PointBatch occupancy;
};

SceneSamples build_scene_samples(const BodyContext& body, const std::vector<ViewInput>& views,
                                 const MeshQueries& gt, const SamplingConfig& config, Rng& rng);

// Rows `rows` of `all` restricted to `views` (in that order), with weights
// renormalized over the chosen views.
PointBatch select_points(const PointBatch& all, const std::vector<std::size_t>& rows, const std::vector<int>& views);

}  // namespace sesdf
