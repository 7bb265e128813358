#include "sesdf/calib/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace sesdf {

std::size_t Mask::count() const { return static_cast<std::size_t>(std::count(data.begin(), data.end(), 1)); }

Mask rasterize_silhouette(const TriangleMesh& mesh, const ViewRig& rig, int stride) {
  if (stride < 1) throw Error("rasterize_silhouette: stride must be >= 1");
  Mask mask(rig.width / stride, rig.height / stride);
  std::vector<Vec2> p(mesh.num_vertices());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = project_orthographic(rig, mesh.vertices[i]).uv;
  const double offset = stride / 2 + 0.5;
  for (const Face& f : mesh.faces) {
    const Vec2 a = p[f[0]], b = p[f[1]], c = p[f[2]];
    const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (area == 0.0 || !std::isfinite(area)) continue;  // edge-on: rays graze it
    const double umin = std::min({a.x(), b.x(), c.x()}), umax = std::max({a.x(), b.x(), c.x()});
    const double vmin = std::min({a.y(), b.y(), c.y()}), vmax = std::max({a.y(), b.y(), c.y()});
    const int i0 = std::max(0, static_cast<int>(std::ceil((umin - offset) / stride)));
    const int i1 = std::min(mask.width - 1, static_cast<int>(std::floor((umax - offset) / stride)));
    const int j0 = std::max(0, static_cast<int>(std::ceil((vmin - offset) / stride)));
    const int j1 = std::min(mask.height - 1, static_cast<int>(std::floor((vmax - offset) / stride)));
    for (int j = j0; j <= j1; ++j) {
      const double y = stride * j + offset;
      for (int i = i0; i <= i1; ++i) {
        if (mask.at(i, j)) continue;
        const double x = stride * i + offset;
        const double e0 = (b.x() - a.x()) * (y - a.y()) - (b.y() - a.y()) * (x - a.x());
        const double e1 = (c.x() - b.x()) * (y - b.y()) - (c.y() - b.y()) * (x - b.x());
        const double e2 = (a.x() - c.x()) * (y - c.y()) - (a.y() - c.y()) * (x - c.x());
        if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) mask.at(i, j) = 1;
      }
    }
  }
  return mask;
}

Mask subsample(const Mask& mask, int stride) {
  Mask out(mask.width / stride, mask.height / stride);
  for (int j = 0; j < out.height; ++j) {
    for (int i = 0; i < out.width; ++i) out.at(i, j) = mask.at(stride * i + stride / 2, stride * j + stride / 2);
  }
  return out;
}

double silhouette_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) throw Error("silhouette_iou: mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void write_pgm(const Mask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  for (uint8_t v : mask.data) out.put(static_cast<char>(v ? 255 : 0));
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  for (int c = in.get(); c != EOF; c = in.get()) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Mask read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  if (pgm_token(in) != "P5") throw Error(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error(path.string() + ": unsupported PGM header");
  Mask mask(w, h);
  std::vector<char> raw(mask.data.size());
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size()))) throw Error(path.string() + ": truncated PGM");
  for (std::size_t i = 0; i < raw.size(); ++i) mask.data[i] = static_cast<uint8_t>(raw[i]) > maxval / 2 ? 1 : 0;
  return mask;
}

}  // namespace sesdf
