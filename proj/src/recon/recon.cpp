#include "sesdf/recon/recon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "sesdf/nn/dataset.hpp"
#include "sesdf/util/log.hpp"

namespace sesdf {

NetworkField::NetworkField(const ModelSet& model, const BodyContext& body, std::vector<ViewInput> views,
                           FusionMode fusion)
    : model_(model), body_(body), views_(std::move(views)), vertices_(body.queries().mesh().vertices),
      fusion_(fusion) {
  if (views_.empty()) throw Error("reconstruction needs at least one view");
  for (const ViewInput& v : views_) rigs_.push_back(v.rig);
  if (body.volume().channels != model.config().space_channels) {
    throw Error("body volume channels do not match the model");
  }
}

void NetworkField::evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const {
  const FusionContext ctx{&body_, &vertices_, &rigs_};
  const PointBatch batch = gather_points(body_, views_, points, [&](const Vec3& x, double* w) {
    const std::vector<double> ws = fusion_weights(fusion_, ctx, x);
    std::copy(ws.begin(), ws.end(), w);
  });
  const PointPrediction p = predict(model_, batch, occupancy != nullptr);
  if (occupancy) std::copy(p.occupancy.begin(), p.occupancy.end(), occupancy);
  if (sdf) std::copy(p.fused_d.begin(), p.fused_d.end(), sdf);
}

void MeshField::evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = mesh_.signed_distance(points[i]).distance;
    if (occupancy) occupancy[i] = d <= 0.0 ? 1.0 : 0.0;
    if (sdf) sdf[i] = d;
  }
}

void AnalyticField::evaluate(const std::vector<Vec3>& points, double* occupancy, double* sdf) const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++calls_;
    const double o = occupancy_(points[i]);
    if (occupancy) occupancy[i] = o;
    if (sdf) sdf[i] = sdf_ ? sdf_(points[i]) : 0.5 - o;
  }
}

ExtractFrom extract_from_string(const std::string& name) {
  if (name == "occupancy") return ExtractFrom::kOccupancy;
  if (name == "sdf") return ExtractFrom::kSdf;
  throw Error("unknown extraction source '" + name + "' (occupancy|sdf)");
}

std::string to_string(ExtractFrom e) { return e == ExtractFrom::kOccupancy ? "occupancy" : "sdf"; }

Aabb grid_bounds(const Aabb& body, double inflation) {
  if (body.empty()) throw Error("empty body bounds");
  const Vec3 pad = inflation * body.extent();
  return Aabb(body.lo - pad, body.hi + pad);
}

ScalarGrid evaluate_grid(const FieldEvaluator& field, const Aabb& bounds, int resolution, ExtractFrom what,
                         std::size_t chunk) {
  if (resolution < 2) throw Error("grid resolution must be >= 2");
  if (chunk == 0) throw Error("chunk size must be positive");
  ScalarGrid grid({resolution, resolution, resolution}, bounds);
  std::vector<Vec3> pts;
  std::vector<double> values;
  for (std::size_t begin = 0; begin < grid.size(); begin += chunk) {
    const std::size_t end = std::min(grid.size(), begin + chunk);
    pts.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) pts[i - begin] = grid.point(i);
    values.resize(pts.size());
    if (what == ExtractFrom::kOccupancy) {
      field.evaluate(pts, values.data(), nullptr);
    } else {
      field.evaluate(pts, nullptr, values.data());
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!std::isfinite(values[i])) {
        std::ostringstream os;
        os << "non-finite field value at (" << pts[i].x() << ", " << pts[i].y() << ", " << pts[i].z() << ")";
        throw Error(os.str());
      }
      grid.values[begin + i] = values[i];
    }
  }
  return grid;
}

GridStats grid_stats(const ScalarGrid& grid) {
  GridStats s;
  if (grid.values.empty()) return s;
  const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
  s.min = *lo;
  s.max = *hi;
  double sum = 0.0;
  for (double v : grid.values) {
    sum += v;
    const double t = s.max > s.min ? (v - s.min) / (s.max - s.min) : 0.0;
    ++s.histogram[std::min<std::size_t>(9, static_cast<std::size_t>(t * 10.0))];
  }
  s.mean = sum / static_cast<double>(grid.values.size());
  return s;
}

nlohmann::json ReconReport::to_json() const {
  return {{"grid_res", grid_res},
          {"eval_seconds", eval_seconds},
          {"extract_seconds", extract_seconds},
          {"triangles", triangles},
          {"vertices", vertices},
          {"removed_faces", removed_faces},
          {"extract_from", extract_from},
          {"grid_min", stats.min},
          {"grid_max", stats.max},
          {"grid_mean", stats.mean},
          {"grid_histogram", stats.histogram}};
}

TriangleMesh extract_surface(const ScalarGrid& grid, double iso) {
  if (grid.values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
  if (iso < *lo || iso > *hi) {
    log::warn("iso level outside the grid's value range; empty surface");
    return {};
  }
  return marching_cubes(grid, iso);
}

ReconResult reconstruct(const FieldEvaluator& field, const Aabb& body_bounds, const ReconConfig& config) {
  using Clock = std::chrono::steady_clock;
  ReconResult out;
  const auto t0 = Clock::now();
  ScalarGrid grid =
      evaluate_grid(field, grid_bounds(body_bounds, config.inflation), config.resolution, config.extract, config.chunk);
  const auto t1 = Clock::now();
  double iso = 0.5;
  if (config.extract == ExtractFrom::kSdf) {
    // marching_cubes treats larger values as inside.
    for (double& v : grid.values) v = -v;
    iso = 0.0;
  }
  out.report.stats = grid_stats(grid);
  TriangleMesh mesh = extract_surface(grid, iso);
  if (mesh.empty()) {
    std::ostringstream os;
    os << "reconstruction extracted no surface; grid range [" << out.report.stats.min << ", "
       << out.report.stats.max << "], histogram";
    for (std::size_t h : out.report.stats.histogram) os << ' ' << h;
    throw Error(os.str());
  }
  if (config.largest_component) {
    const std::size_t before = mesh.num_faces();
    mesh = largest_connected_component(mesh);
    out.report.removed_faces = before - mesh.num_faces();
  }
  out.report.grid_res = config.resolution;
  out.report.eval_seconds = std::chrono::duration<double>(t1 - t0).count();
  out.report.extract_seconds = std::chrono::duration<double>(Clock::now() - t1).count();
  out.report.triangles = mesh.num_faces();
  out.report.vertices = mesh.num_vertices();
  out.report.extract_from = to_string(config.extract);
  out.mesh = std::move(mesh);
  return out;
}

}  // namespace sesdf
