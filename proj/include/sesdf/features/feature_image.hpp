#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "sesdf/calib/view_rig.hpp"
#include "sesdf/features/embedding.hpp"
#include "sesdf/geometry/mesh_queries.hpp"

namespace sesdf {

// Channel layout of a rendered view. Depth is the camera-frame Z of the first
// hit and the normal is in the camera frame; both are defined only where the
// mask is 1 (depth is +inf elsewhere, normal zero). The distance channel is
// the Euclidean distance to the nearest foreground pixel centre in scene
// units (pixels / ortho_scale), +inf when the mask is empty.
enum ImageChannel : int { kMask = 0, kDepth, kNormalX, kNormalY, kNormalZ, kForegroundDistance, kImageChannels };

struct FeatureImage {
  int channels = kImageChannels;
  int width = 0;
  int height = 0;
  std::vector<float> data;  // planes, then rows, x fastest

  FeatureImage() = default;
  FeatureImage(int c, int w, int h);

  float& at(int c, int x, int y) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int x, int y) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

// Orthographic ray cast per pixel centre. Pixels outside the projected bounds
// of the mesh are background without casting.
FeatureImage render_feature_image(const MeshQueries& mesh, const ViewRig& rig);

// Exact Euclidean distance (in pixels) from every pixel to the nearest pixel
// with mask != 0; +inf everywhere when there is none. Separable two-pass
// lower-envelope algorithm.
std::vector<double> euclidean_distance_transform(const std::vector<uint8_t>& mask, int width, int height);

// Bilinear interpolation with pixel (i, j) centred at (i + 0.5, j + 0.5);
// taps beyond the border clamp to the edge. Points outside [0, W] x [0, H]
// give all zeros. Non-finite taps (background depth, empty-mask distance)
// contribute zero, so the result is always finite.
void sample_pixel_channels(const FeatureImage& img, double u, double v, double* out);
std::array<double, 4> bilinear_weights(double fu, double fv);

// Bilinear channels mapped through the embedding to the pixel-aligned feature.
std::vector<double> sample_pixel_feature(const FeatureImage& img, const AffineEmbedding& embed, double u,
                                         double v);

// "SESF", u32 C, H, W, then f32 planes.
void write_feature_image(const FeatureImage& img, const std::filesystem::path& path);
FeatureImage read_feature_image(const std::filesystem::path& path);

}  // namespace sesdf
