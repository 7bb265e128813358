#include "sesdf/nn/dataset.hpp"

#include "sesdf/fusion/fusion.hpp"
#include "sesdf/util/parallel.hpp"

namespace sesdf {

PointBatch gather_points(const BodyContext& body, const std::vector<ViewInput>& views, const std::vector<Vec3>& points,
                         const ViewWeightFn& weights) {
  if (views.empty()) throw Error("gather_points: no views");
  const int k = static_cast<int>(views.size());
  const int cs = body.volume().channels;
  PointBatch b;
  b.views = k;
  b.space_channels = cs;
  b.points = points.size();
  b.image.resize(b.points * k * kImageChannels);
  b.z.resize(b.points * k);
  b.weight.resize(b.points * k);
  b.space.resize(b.points * cs);
  b.body_d.resize(b.points);
  b.body_n.resize(b.points);

  constexpr std::size_t kBlock = 256;
  parallel_for((b.points + kBlock - 1) / kBlock, [&](std::size_t blk) {
    std::vector<PointTuple> tuples;
    const std::size_t end = std::min(b.points, (blk + 1) * kBlock);
    for (std::size_t p = blk * kBlock; p < end; ++p) {
      const BodyContext::Probe probe = body.probe(points[p]);
      assemble_point_feature(body, views, points[p], probe, tuples);
      b.body_d[p] = probe.d;
      b.body_n[p] = probe.n;
      std::copy(tuples[0].space.begin(), tuples[0].space.begin() + cs, b.space.begin() + p * cs);
      for (int v = 0; v < k; ++v) {
        std::copy(tuples[v].image.begin(), tuples[v].image.end(), b.image.begin() + (p * k + v) * kImageChannels);
        b.z[p * k + v] = tuples[v].z;
      }
      double* w = b.weight.data() + p * k;
      if (weights) {
        weights(points[p], w);
      } else {
        std::fill(w, w + k, 1.0 / k);
      }
    }
  });
  return b;
}

SceneSamples build_scene_samples(const BodyContext& body, const std::vector<ViewInput>& views, const MeshQueries& gt,
                                 const SamplingConfig& config, Rng& rng) {
  const SampleBatch samples = make_sample_batch(gt, config, rng);
  std::vector<Vec3> pts;
  pts.reserve(samples.surface.size());
  for (const auto& s : samples.surface) pts.push_back(s.x);
  SceneSamples out;
  out.surface = gather_points(body, views, pts);
  for (const auto& s : samples.surface) out.surface.normal_gt.push_back(s.n_gt);

  pts.clear();
  for (const auto& s : samples.occupancy) pts.push_back(s.x);
  const double eps = occlusion_epsilon(body.queries());
  out.occupancy = gather_points(body, views, pts, [&](const Vec3& x, double* w) {
    for (std::size_t v = 0; v < views.size(); ++v) w[v] = occlusion_weight(x, views[v].rig, body.queries(), eps);
  });
  for (const auto& s : samples.occupancy) out.occupancy.label.push_back(s.o_gt);
  return out;
}

PointBatch select_points(const PointBatch& all, const std::vector<std::size_t>& rows, const std::vector<int>& views) {
  if (views.empty()) throw Error("select_points: no views");
  for (int v : views) {
    if (v < 0 || v >= all.views) throw Error("select_points: view index out of range");
  }
  const int k = static_cast<int>(views.size());
  const int ci = all.image_channels, cs = all.space_channels;
  PointBatch b;
  b.views = k;
  b.image_channels = ci;
  b.space_channels = cs;
  b.points = rows.size();
  b.reserve(rows.size());
  for (std::size_t p : rows) {
    if (p >= all.points) throw Error("select_points: row out of range");
    double sum = 0.0;
    for (int v : views) sum += all.weight[p * all.views + v];
    for (int v : views) {
      const std::size_t src = p * all.views + v;
      b.image.insert(b.image.end(), all.image.begin() + src * ci, all.image.begin() + (src + 1) * ci);
      b.z.push_back(all.z[src]);
      b.weight.push_back(sum > 0.0 ? all.weight[src] / sum : 1.0 / k);
    }
    b.space.insert(b.space.end(), all.space.begin() + p * cs, all.space.begin() + (p + 1) * cs);
    b.body_d.push_back(all.body_d[p]);
    b.body_n.push_back(all.body_n[p]);
    if (!all.normal_gt.empty()) b.normal_gt.push_back(all.normal_gt[p]);
    if (!all.label.empty()) b.label.push_back(all.label[p]);
  }
  return b;
}

}  // namespace sesdf
