#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sesdf/calib/view_rig.hpp"
#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // row-major, row index = v

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
  uint8_t& at(int i, int j) { return data[static_cast<std::size_t>(j) * width + i]; }
  uint8_t at(int i, int j) const { return data[static_cast<std::size_t>(j) * width + i]; }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

// Pixel = 1 iff the orthographic ray through its sample point hits the mesh.
// With stride s the output is (width/s) x (height/s) and pixel (i, j) samples
// the full-resolution pixel centre of (s*i + s/2, s*j + s/2), so a strided
// raster equals subsample(full raster, s) exactly.
Mask rasterize_silhouette(const TriangleMesh& mesh, const ViewRig& rig, int stride = 1);
Mask subsample(const Mask& mask, int stride);

// |a & b| / |a | b|; two empty masks give 1.
double silhouette_iou(const Mask& a, const Mask& b);

void write_pgm(const Mask& mask, const std::filesystem::path& path);  // binary P5, 0/255
Mask read_pgm(const std::filesystem::path& path);                     // > maxval/2 -> 1

}  // namespace sesdf
