#include "sesdf/metrics/metrics.hpp"

#include <fstream>
#include <iomanip>

#include "sesdf/geometry/bvh.hpp"
#include "sesdf/sampling/sampling.hpp"
#include "sesdf/util/parallel.hpp"

namespace sesdf {

namespace {

template <class ClosestFn>
double mean_distance(const TriangleMesh& pred, std::size_t n_samples, uint64_t seed, const ClosestFn& closest) {
  if (n_samples == 0) throw Error("p2s: need at least one sample");
  Rng rng(seed);
  const std::vector<SurfaceSample> samples = sample_surface(pred, n_samples, rng);
  std::vector<double> dist(samples.size());
  constexpr std::size_t kBlock = 512;
  parallel_for((samples.size() + kBlock - 1) / kBlock, [&](std::size_t b) {
    const std::size_t end = std::min(samples.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) dist[i] = std::sqrt(closest(samples[i].x).distance_squared);
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(dist.size());
}

}  // namespace

double p2s(const TriangleMesh& pred, const MeshQueries& gt, std::size_t n_samples, uint64_t seed) {
  if (pred.empty() || gt.mesh().empty()) throw Error("p2s: empty mesh");
  return mean_distance(pred, n_samples, seed, [&](const Vec3& x) { return gt.closest_point(x); });
}

// Unsigned distances only, so a bare BVH suffices and open meshes are fine.
double p2s(const TriangleMesh& pred, const TriangleMesh& gt, std::size_t n_samples, uint64_t seed) {
  if (pred.empty() || gt.empty()) throw Error("p2s: empty mesh");
  const Bvh bvh(gt);
  return mean_distance(pred, n_samples, seed, [&](const Vec3& x) { return bvh.closest_point(gt, x); });
}

ChamferResult chamfer_detail(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples, uint64_t seed) {
  if (a.empty() || b.empty()) throw Error("chamfer: empty mesh");
  ChamferResult r;
  r.forward = p2s(a, b, n_samples, seed);
  r.backward = p2s(b, a, n_samples, mix_seed(seed, 1));
  r.chamfer = 0.5 * (r.forward + r.backward);
  return r;
}

double chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n_samples, uint64_t seed) {
  return chamfer_detail(a, b, n_samples, seed).chamfer;
}

void ProtocolTable::write_csv(std::ostream& os) const {
  os << "angle,chamfer,p2s\n" << std::setprecision(8);
  for (const AngleRow& r : rows) os << r.angle << ',' << r.chamfer << ',' << r.p2s << '\n';
  os << "mean," << mean_chamfer << ',' << mean_p2s << '\n';
}

void ProtocolTable::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  write_csv(os);
}

ProtocolTable eval_protocol(const std::vector<double>& angles, const AngleMeshes& meshes, std::size_t n_samples,
                            uint64_t seed) {
  if (angles.empty()) throw Error("eval_protocol: no angles");
  ProtocolTable t;
  for (double angle : angles) {
    TriangleMesh pred, gt;
    meshes(angle, pred, gt);
    if (pred.empty() || gt.empty()) throw Error("eval_protocol: missing meshes for angle " + std::to_string(angle));
    AngleRow row;
    row.angle = angle;
    row.p2s = p2s(pred, gt, n_samples, seed);
    row.chamfer = 0.5 * (row.p2s + p2s(gt, pred, n_samples, mix_seed(seed, 1)));
    t.rows.push_back(row);
    t.mean_chamfer += row.chamfer;
    t.mean_p2s += row.p2s;
  }
  t.mean_chamfer /= static_cast<double>(t.rows.size());
  t.mean_p2s /= static_cast<double>(t.rows.size());
  return t;
}

}  // namespace sesdf
