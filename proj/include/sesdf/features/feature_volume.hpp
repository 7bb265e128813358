#pragma once

#include <vector>

#include "sesdf/features/embedding.hpp"
#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

// Per-vertex splat layout: offset from the cell centre (3), vertex normal (3),
// one-hot body part (parts).
constexpr int kVolumeOffsetChannels = 3;
constexpr int kVolumeNormalChannels = 3;

struct FeatureVolume {
  int resolution = 0;
  int channels = 0;
  Aabb bounds;
  std::vector<float> data;      // cell-major: ((k * D + j) * D + i) * C + c
  std::vector<uint32_t> hits;   // vertices averaged into each cell

  double cell_size(int axis) const { return bounds.extent()[axis] / resolution; }
  Vec3 cell_center(int i, int j, int k) const;
  std::size_t cell_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution + j) * resolution + i;
  }
  const float* cell(int i, int j, int k) const { return data.data() + cell_index(i, j, k) * channels; }
};

// Average-pools per-vertex features into a resolution^3 grid over `bounds`.
// part[v] in [0, parts). Vertices outside the bounds are clamped into the
// border cell with a warning.
FeatureVolume splat_volume(const TriangleMesh& body, const std::vector<int>& part, int parts,
                           const Aabb& bounds, int resolution = 64);

// Trilinear interpolation between cell centres, clamped at the border cells.
// Points outside the bounds give all zeros.
void sample_space_channels(const FeatureVolume& vol, const Vec3& x, double* out);

std::vector<double> sample_space_feature(const FeatureVolume& vol, const AffineEmbedding& embed, const Vec3& x);

}  // namespace sesdf
