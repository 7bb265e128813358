#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sesdf/geometry/mesh_queries.hpp"

namespace sesdf {

constexpr std::size_t kDefaultMetricSamples = 10000;

// Mean unsigned distance from n_samples area-uniform samples of `pred` to
// the surface of `gt`. Throws on empty meshes.
double p2s(const TriangleMesh& pred, const MeshQueries& gt, std::size_t n_samples = kDefaultMetricSamples,
           uint64_t seed = 0);
double p2s(const TriangleMesh& pred, const TriangleMesh& gt, std::size_t n_samples = kDefaultMetricSamples,
           uint64_t seed = 0);

struct ChamferResult {
  double chamfer = 0.0;  // (forward + backward) / 2
  double forward = 0.0;  // p2s(a -> b)
  double backward = 0.0; // p2s(b -> a)
};

ChamferResult chamfer_detail(const TriangleMesh& a, const TriangleMesh& b,
                             std::size_t n_samples = kDefaultMetricSamples, uint64_t seed = 0);
double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples = kDefaultMetricSamples,
               uint64_t seed = 0);

struct AngleRow {
  double angle = 0.0;  // degrees
  double chamfer = 0.0;
  double p2s = 0.0;
};

struct ProtocolTable {
  std::vector<AngleRow> rows;
  double mean_chamfer = 0.0;
  double mean_p2s = 0.0;

  // angle,chamfer,p2s with a final "mean" row.
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
};

// For each angle, `meshes(angle, pred, gt)` supplies the reconstruction
// from that input angle and the ground truth in the same orientation.
using AngleMeshes = std::function<void(double angle, TriangleMesh& pred, TriangleMesh& gt)>;
ProtocolTable eval_protocol(const std::vector<double>& angles, const AngleMeshes& meshes,
                            std::size_t n_samples = kDefaultMetricSamples, uint64_t seed = 0);

}  // namespace sesdf
