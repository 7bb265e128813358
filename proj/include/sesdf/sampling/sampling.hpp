#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sesdf/geometry/mesh_queries.hpp"
#include "sesdf/util/rng.hpp"

namespace sesdf {

struct SurfaceSample {
  Vec3 x = Vec3::Zero();
  Vec3 n_gt = Vec3::UnitZ();
  int face = -1;
  Vec3 barycentric = Vec3::Zero();
};

struct OccupancySample {
  Vec3 x = Vec3::Zero();
  uint8_t o_gt = 0;
};

struct SampleBatch {
  std::vector<SurfaceSample> surface;
  std::vector<OccupancySample> occupancy;
};

// Area-weighted face choice, uniform barycentrics, interpolated vertex
// normals renormalized. Uses mesh.vertex_normals when present.
std::vector<SurfaceSample> sample_surface(const TriangleMesh& mesh, std::size_t count, Rng& rng);

// count/16 points uniform in `bounds`, the rest surface points pushed along
// their normal by N(0, sigma^2). Near-surface points come first.
std::vector<OccupancySample> sample_occupancy(const MeshQueries& gt, std::size_t count, double sigma,
                                              const Aabb& bounds, Rng& rng);

// 1 iff the signed distance is <= 0. Open meshes fall back to ray parity.
uint8_t occupancy_gt(const MeshQueries& gt, const Vec3& x);

// (d, sin(2^0 pi d), cos(2^0 pi d), ..., sin(2^L pi d), cos(2^L pi d))
std::vector<double> distance_encode(double d, int L);
void distance_encode(double d, int L, double* out);  // writes 2L+3 values
constexpr int distance_code_size(int L) { return 2 * L + 3; }

struct SamplingConfig {
  std::size_t surface_count = 5000;
  std::size_t occupancy_count = 5000;
  double sigma_fraction = 0.05;     // of the ground-truth bbox diagonal
  double bounds_inflation = 0.10;   // per side, of the bbox extent
};

SampleBatch make_sample_batch(const MeshQueries& gt, const SamplingConfig& config, Rng& rng);

// Flat little-endian container: "SESB", u32 surface count, u32 occupancy
// count, then f32 records (x y z nx ny nz) and (x y z o).
void write_sample_batch(const SampleBatch& batch, const std::filesystem::path& path);
SampleBatch read_sample_batch(const std::filesystem::path& path);

}  // namespace sesdf
