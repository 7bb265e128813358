#include "sesdf/features/feature_volume.hpp"

#include <algorithm>
#include <cmath>

#include "sesdf/util/log.hpp"

namespace sesdf {

Vec3 FeatureVolume::cell_center(int i, int j, int k) const {
  const Vec3 h = bounds.extent() / resolution;
  return bounds.lo + Vec3((i + 0.5) * h.x(), (j + 0.5) * h.y(), (k + 0.5) * h.z());
}

FeatureVolume splat_volume(const TriangleMesh& body, const std::vector<int>& part, int parts,
                           const Aabb& bounds, int resolution) {
  if (resolution < 1) throw Error("splat_volume: resolution must be positive");
  if (part.size() != body.num_vertices()) throw Error("splat_volume: one part label per vertex required");
  if (bounds.empty() || !(bounds.extent().array() > 0.0).all()) throw Error("splat_volume: degenerate bounds");

  FeatureVolume vol;
  vol.resolution = resolution;
  vol.channels = kVolumeOffsetChannels + kVolumeNormalChannels + parts;
  vol.bounds = bounds;
  const std::size_t cells = static_cast<std::size_t>(resolution) * resolution * resolution;
  std::vector<double> sum(cells * vol.channels, 0.0);
  vol.hits.assign(cells, 0);

  const std::vector<Vec3> normals =
      body.vertex_normals.size() == body.num_vertices() ? body.vertex_normals : compute_vertex_normals(body);
  const Vec3 h = bounds.extent() / resolution;
  std::size_t clamped = 0;
  for (std::size_t v = 0; v < body.num_vertices(); ++v) {
    if (part[v] < 0 || part[v] >= parts) throw Error("splat_volume: part label out of range");
    const Vec3& p = body.vertices[v];
    if (!bounds.contains(p)) ++clamped;
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      idx[a] = std::clamp(static_cast<int>(std::floor((p[a] - bounds.lo[a]) / h[a])), 0, resolution - 1);
    }
    const std::size_t c = vol.cell_index(idx[0], idx[1], idx[2]);
    const Vec3 offset = p - vol.cell_center(idx[0], idx[1], idx[2]);
    double* s = sum.data() + c * vol.channels;
    for (int a = 0; a < 3; ++a) {
      s[a] += offset[a];
      s[3 + a] += normals[v][a];
    }
    s[6 + part[v]] += 1.0;
    vol.hits[c]++;
  }
  if (clamped > 0) log::warn("splat_volume: " + std::to_string(clamped) + " vertices outside the bounds were clamped");

  vol.data.assign(cells * vol.channels, 0.0f);
  for (std::size_t c = 0; c < cells; ++c) {
    if (vol.hits[c] == 0) continue;
    const double inv = 1.0 / vol.hits[c];
    for (int k = 0; k < vol.channels; ++k) {
      vol.data[c * vol.channels + k] = static_cast<float>(sum[c * vol.channels + k] * inv);
    }
  }
  return vol;
}

void sample_space_channels(const FeatureVolume& vol, const Vec3& x, double* out) {
  std::fill(out, out + vol.channels, 0.0);
  if (!vol.bounds.contains(x)) return;
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double g = (x[a] - vol.bounds.lo[a]) / vol.cell_size(a) - 0.5;
    const double fl = std::floor(g);
    i0[a] = static_cast<int>(fl);
    f[a] = g - fl;
  }
  for (int corner = 0; corner < 8; ++corner) {
    double w = 1.0;
    int idx[3];
    for (int a = 0; a < 3; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? f[a] : 1.0 - f[a];
      idx[a] = std::clamp(i0[a] + bit, 0, vol.resolution - 1);
    }
    if (w == 0.0) continue;
    const float* c = vol.cell(idx[0], idx[1], idx[2]);
    for (int k = 0; k < vol.channels; ++k) out[k] += w * c[k];
  }
}

std::vector<double> sample_space_feature(const FeatureVolume& vol, const AffineEmbedding& embed, const Vec3& x) {
  if (embed.in != vol.channels) throw Error("sample_space_feature: embedding expects a different channel count");
  std::vector<double> raw(vol.channels);
  sample_space_channels(vol, x, raw.data());
  return embed.apply(raw);
}

}  // namespace sesdf
