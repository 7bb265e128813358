#include "sesdf/sampling/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sesdf/util/binary_io.hpp"
#include "sesdf/util/log.hpp"

namespace sesdf {

std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, std::size_t count, Rng& rng) {
  std::vector<double> cumulative(mesh.num_faces());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw Error("sample_surface: mesh has zero surface area");

  std::vector<Vec3> computed;
  const std::vector<Vec3>* normals = &mesh.vertex_normals;
  if (mesh.vertex_normals.size() != mesh.num_vertices()) {
    computed = compute_vertex_normals(mesh);
    normals = &computed;
  }

  std::vector<SurfaceSample> out(count);
  for (SurfaceSample& s : out) {
    const double r = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const int f = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                            static_cast<std::ptrdiff_t>(mesh.num_faces()) - 1));
    const double su = std::sqrt(uniform01(rng));
    const double r2 = uniform01(rng);
    const Vec3 b(1.0 - su, su * (1.0 - r2), su * r2);
    const Face& t = mesh.faces[f];
    s.face = f;
    s.barycentric = b;
    s.x = b[0] * mesh.vertices[t[0]] + b[1] * mesh.vertices[t[1]] + b[2] * mesh.vertices[t[2]];
    Vec3 n = b[0] * (*normals)[t[0]] + b[1] * (*normals)[t[1]] + b[2] * (*normals)[t[2]];
    // Interpolated normals can cancel across sharp creases; the face normal
    // is the only sensible fallback there.
    s.n_gt = n.norm() > 1e-12 ? n.normalized() : mesh.face_normal(f);
  }
  return out;
}

uint8_t occupancy_gt(const MeshQueries& gt, const Vec3& x) {
  if (!gt.watertight()) {
    static bool warned = false;
    if (!warned) {
      log::warn("occupancy_gt: mesh is not watertight, labels use ray parity");
      warned = true;
    }
    return gt.inside_by_parity(x) ? 1 : 0;
  }
  return gt.signed_distance(x).distance <= 0.0 ? 1 : 0;
}

std::vector<OccupancySample> sample_occupancy(const MeshQueries& gt, std::size_t count, double sigma,
                                              const Aabb& bounds, Rng& rng) {
  if (!(sigma > 0.0)) throw Error("sample_occupancy: sigma must be positive");
  if (bounds.empty() || !((bounds.extent().array() > 0.0).all())) {
    throw Error("sample_occupancy: degenerate bounds");
  }
  const std::size_t uniform_count = count / 16;
  const std::vector<SurfaceSample> surface = sample_surface(gt.mesh(), count - uniform_count, rng);
  std::vector<OccupancySample> out(count);
  for (std::size_t i = 0; i < surface.size(); ++i) {
    out[i].x = surface[i].x + normal(rng, 0.0, sigma) * surface[i].n_gt;
  }
  for (std::size_t i = surface.size(); i < count; ++i) {
    out[i].x = Vec3(uniform(rng, bounds.lo.x(), bounds.hi.x()), uniform(rng, bounds.lo.y(), bounds.hi.y()),
                    uniform(rng, bounds.lo.z(), bounds.hi.z()));
  }
  for (OccupancySample& s : out) s.o_gt = occupancy_gt(gt, s.x);
  return out;
}

void distance_encode(double d, int L, double* out) {
  if (L < 0) throw Error("distance_encode: L must be non-negative");
  out[0] = d;
  double freq = std::numbers::pi;
  for (int l = 0; l <= L; ++l, freq *= 2.0) {
    out[1 + 2 * l] = std::sin(freq * d);
    out[2 + 2 * l] = std::cos(freq * d);
  }
}

std::vector<double> distance_encode(double d, int L) {
  std::vector<double> out(distance_code_size(std::max(L, 0)));
  distance_encode(d, L, out.data());
  return out;
}

SampleBatch make_sample_batch(const MeshQueries& gt, const SamplingConfig& config, Rng& rng) {
  const Aabb box = gt.mesh().bounds();
  SampleBatch batch;
  batch.surface = sample_surface(gt.mesh(), config.surface_count, rng);
  batch.occupancy = sample_occupancy(gt, config.occupancy_count, config.sigma_fraction * box.diagonal(),
                                     box.inflated(config.bounds_inflation), rng);
  return batch;
}

void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  binio::write_magic(os, "SESB");
  binio::write<uint32_t>(os, static_cast<uint32_t>(batch.surface.size()));
  binio::write<uint32_t>(os, static_cast<uint32_t>(batch.occupancy.size()));
  for (const SurfaceSample& s : batch.surface) {
    for (int k = 0; k < 3; ++k) binio::write<float>(os, static_cast<float>(s.x[k]));
    for (int k = 0; k < 3; ++k) binio::write<float>(os, static_cast<float>(s.n_gt[k]));
  }
  for (const OccupancySample& s : batch.occupancy) {
    for (int k = 0; k < 3; ++k) binio::write<float>(os, static_cast<float>(s.x[k]));
    binio::write<float>(os, static_cast<float>(s.o_gt));
  }
  if (!os) throw Error("write failed: " + path.string());
}

SampleBatch read_sample_batch(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  binio::expect_magic(is, "SESB");
  const uint32_t ns = binio::read<uint32_t>(is);
  const uint32_t no = binio::read<uint32_t>(is);
  SampleBatch batch;
  batch.surface.resize(ns);
  batch.occupancy.resize(no);
  for (SurfaceSample& s : batch.surface) {
    for (int k = 0; k < 3; ++k) s.x[k] = binio::read<float>(is);
    for (int k = 0; k < 3; ++k) s.n_gt[k] = binio::read<float>(is);
  }
  for (OccupancySample& s : batch.occupancy) {
    for (int k = 0; k < 3; ++k) s.x[k] = binio::read<float>(is);
    const float o = binio::read<float>(is);
    if (o != 0.0f && o != 1.0f) throw Error("SESB: occupancy label must be 0 or 1");
    s.o_gt = static_cast<uint8_t>(o);
  }
  return batch;
}

}  // namespace sesdf
