#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "sesdf/fusion/fusion.hpp"
#include "sesdf/geometry/marching_cubes.hpp"
#include "sesdf/nn/model.hpp"

namespace sesdf {

// Anything that can answer occupancy (and, optionally, a signed distance)
// for a batch of points. Implementations must be safe to call from one
// thread at a time and deterministic.
class FieldEvaluator {
 public:
  virtual ~FieldEvaluator() = default;
  // occupancy in [0, 1]; sdf negative inside. Either output may be null.
  virtual void evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const = 0;
};

// The trained networks over a scene's views with a fusion strategy.
class NetworkField : public FieldEvaluator {
 public:
  NetworkField(const ModelSet& model, const BodyContext& body, std::vector<ViewInput> views, FusionMode fusion);
  void evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const override;

 private:
  const ModelSet& model_;
  const BodyContext& body_;
  std::vector<ViewInput> views_;
  std::vector<ViewRig> rigs_;
  VertexIndex vertices_;
  FusionMode fusion_;
};

// Oracle field: indicator and signed distance of a watertight mesh.
class MeshField : public FieldEvaluator {
 public:
  explicit MeshField(const MeshQueries& mesh) : mesh_(mesh) {}
  void evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const override;

 private:
  const MeshQueries& mesh_;
};

// Closed-form field; `sdf` may be empty, in which case 0.5 - occupancy is
// reported as the distance.
class AnalyticField : public FieldEvaluator {
 public:
  AnalyticField(std::function<double(const Vec3&)> occupancy, std::function<double(const Vec3&)> sdf = {})
      : occupancy_(std::move(occupancy)), sdf_(std::move(sdf)) {}
  void evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const override;
  long calls() const { return calls_; }

 private:
  std::function<double(const Vec3&)> occupancy_;
  std::function<double(const Vec3&)> sdf_;
  mutable long calls_ = 0;
};

enum class ExtractFrom { kOccupancy, kSdf };
ExtractFrom extract_from_string(const std::string& name);
std::string to_string(ExtractFrom e);

struct ReconConfig {
  int resolution = 128;      // lattice points per axis
  double inflation = 0.15;   // per side, relative to the body bbox extent
  std::size_t chunk = 65536;
  ExtractFrom extract = ExtractFrom::kOccupancy;
  bool largest_component = true;
};

// Lattice over bounds inflated by `inflation` per side.
Aabb grid_bounds(const Aabb& body_bounds, double inflation);

// Occupancy (or signed distance when extracting from the SDF) at every
// lattice point, in chunks. Throws on a non-finite value, naming the point.
ScalarGrid evaluate_grid(const FieldEvaluator& field, const Aabb& bounds, int resolution, ExtractFrom what,
                         std::size_t chunk = 65536);

struct GridStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::array<std::size_t, 10> histogram{};  // over [min, max]
};
GridStats grid_stats(const ScalarGrid& grid);

struct ReconReport {
  int grid_res = 0;
  double eval_seconds = 0.0;
  double extract_seconds = 0.0;
  std::size_t triangles = 0;
  std::size_t vertices = 0;
  std::size_t removed_faces = 0;  // by the largest-component filter
  std::string extract_from;
  GridStats stats;

  nlohmann::json to_json() const;
};

struct ReconResult {
  TriangleMesh mesh;
  ReconReport report;
};

// Iso level 0.5 on occupancy, 0 on the signed distance. Empty extraction is
// an error that carries the grid histogram.
ReconResult reconstruct(const FieldEvaluator& field, const Aabb& body_bounds, const ReconConfig& config);

// marching_cubes with the iso level checked against the value range: a
// level outside [min, max] yields an empty mesh and a warning.
TriangleMesh extract_surface(const ScalarGrid& grid, double iso);

}  // namespace sesdf
