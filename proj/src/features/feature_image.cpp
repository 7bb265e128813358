#include "sesdf/features/feature_image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sesdf/geometry/triangle.hpp"
#include "sesdf/util/binary_io.hpp"
#include "sesdf/util/parallel.hpp"

namespace sesdf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of f (lower envelope of parabolas rooted at
// the finite entries).
void edt_1d(const double* f, int n, double* d, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}
}  // namespace

FeatureImage::FeatureImage(int c, int w, int h)
    : channels(c), width(w), height(h), data(static_cast<std::size_t>(c) * w * h, 0.0f) {}

std::vector<double> euclidean_distance_transform(const std::vector<uint8_t>& mask, int width, int height) {
  const int n = std::max(width, height);
  std::vector<double> g(static_cast<std::size_t>(width) * height);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) f[y] = mask[static_cast<std::size_t>(y) * width + x] ? 0.0 : kInf;
    edt_1d(f.data(), height, d.data(), v, z);
    for (int y = 0; y < height; ++y) g[static_cast<std::size_t>(y) * width + x] = d[y];
  }
  for (int y = 0; y < height; ++y) {
    edt_1d(g.data() + static_cast<std::size_t>(y) * width, width, d.data(), v, z);
    for (int x = 0; x < width; ++x) g[static_cast<std::size_t>(y) * width + x] = std::sqrt(d[x]);
  }
  return g;
}

FeatureImage render_feature_image(const MeshQueries& q, const ViewRig& rig) {
  rig.check();
  const TriangleMesh& mesh = q.mesh();
  FeatureImage img(kImageChannels, rig.width, rig.height);
  const std::size_t plane = static_cast<std::size_t>(rig.width) * rig.height;
  std::fill(img.data.begin() + kDepth * plane, img.data.begin() + (kDepth + 1) * plane,
            std::numeric_limits<float>::infinity());

  std::vector<uint8_t> mask(plane, 0);
  if (!mesh.empty()) {
    const std::vector<Vec3> normals = mesh.vertex_normals.size() == mesh.num_vertices()
                                          ? mesh.vertex_normals
                                          : compute_vertex_normals(mesh);
    Vec2 lo = Vec2::Constant(kInf), hi = Vec2::Constant(-kInf);
    double zmin = kInf;
    for (const Vec3& p : mesh.vertices) {
      const Projection pr = project_orthographic(rig, p);
      lo = lo.cwiseMin(pr.uv);
      hi = hi.cwiseMax(pr.uv);
      zmin = std::min(zmin, pr.depth);
    }
    const double z0 = zmin - 1.0;
    const int i0 = std::max(0, static_cast<int>(std::floor(lo.x() - 0.5)));
    const int i1 = std::min(rig.width - 1, static_cast<int>(std::ceil(hi.x() - 0.5)));
    const int j0 = std::max(0, static_cast<int>(std::floor(lo.y() - 0.5)));
    const int j1 = std::min(rig.height - 1, static_cast<int>(std::ceil(hi.y() - 0.5)));
    const Vec3 dir = rig.forward();
    if (i0 <= i1 && j0 <= j1) {
      parallel_for(static_cast<std::size_t>(j1 - j0 + 1), [&](std::size_t row) {
        const int j = j0 + static_cast<int>(row);
        for (int i = i0; i <= i1; ++i) {
          const Vec3 origin = unproject(rig, Vec2(i + 0.5, j + 0.5), z0);
          const auto hit = q.ray_nearest_hit(origin, dir);
          if (!hit) continue;
          const Face& f = mesh.faces[hit->face];
          const Vec3 b = closest_point_on_triangle(hit->point, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                                   mesh.vertices[f[2]])
                             .barycentric;
          Vec3 n = b[0] * normals[f[0]] + b[1] * normals[f[1]] + b[2] * normals[f[2]];
          n = n.norm() > 1e-12 ? n.normalized() : q.face_normal(hit->face);
          const Vec3 nc = rig.rotation * n;
          mask[static_cast<std::size_t>(j) * rig.width + i] = 1;
          img.at(kMask, i, j) = 1.0f;
          img.at(kDepth, i, j) = static_cast<float>(z0 + hit->t);
          img.at(kNormalX, i, j) = static_cast<float>(nc.x());
          img.at(kNormalY, i, j) = static_cast<float>(nc.y());
          img.at(kNormalZ, i, j) = static_cast<float>(nc.z());
        }
      });
    }
  }
  const std::vector<double> edt = euclidean_distance_transform(mask, rig.width, rig.height);
  for (std::size_t p = 0; p < plane; ++p) {
    img.data[kForegroundDistance * plane + p] = static_cast<float>(edt[p] / rig.ortho_scale);
  }
  return img;
}

std::array<double, 4> bilinear_weights(double fu, double fv) {
  return {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
}

void sample_pixel_channels(const FeatureImage& img, double u, double v, double* out) {
  std::fill(out, out + img.channels, 0.0);
  if (!(u >= 0.0 && u <= img.width && v >= 0.0 && v <= img.height)) return;
  const double gx = u - 0.5, gy = v - 0.5;
  const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
  const auto w = bilinear_weights(gx - x0, gy - y0);
  const int xs[2] = {std::clamp(x0, 0, img.width - 1), std::clamp(x0 + 1, 0, img.width - 1)};
  const int ys[2] = {std::clamp(y0, 0, img.height - 1), std::clamp(y0 + 1, 0, img.height - 1)};
  for (int c = 0; c < img.channels; ++c) {
    double s = 0.0;
    for (int t = 0; t < 4; ++t) {
      if (w[t] == 0.0) continue;
      const float val = img.at(c, xs[t & 1], ys[t >> 1]);
      if (std::isfinite(val)) s += w[t] * val;
    }
    out[c] = s;
  }
}

std::vector<double> sample_pixel_feature(const FeatureImage& img, const AffineEmbedding& embed, double u,
                                         double v) {
  if (embed.in != img.channels) throw Error("sample_pixel_feature: embedding expects a different channel count");
  std::vector<double> raw(img.channels);
  sample_pixel_channels(img, u, v, raw.data());
  return embed.apply(raw);
}

void write_feature_image(const FeatureImage& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  binio::write_magic(os, "SESF");
  binio::write<uint32_t>(os, static_cast<uint32_t>(img.channels));
  binio::write<uint32_t>(os, static_cast<uint32_t>(img.height));
  binio::write<uint32_t>(os, static_cast<uint32_t>(img.width));
  for (float v : img.data) binio::write<float>(os, v);
  if (!os) throw Error("write failed: " + path.string());
}

FeatureImage read_feature_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  binio::expect_magic(is, "SESF");
  const uint32_t c = binio::read<uint32_t>(is);
  const uint32_t h = binio::read<uint32_t>(is);
  const uint32_t w = binio::read<uint32_t>(is);
  if (c == 0 || c > 64 || h == 0 || w == 0 || h > 16384 || w > 16384) {
    throw Error("SESF: implausible header in " + path.string());
  }
  FeatureImage img(static_cast<int>(c), static_cast<int>(w), static_cast<int>(h));
  for (float& v : img.data) v = binio::read<float>(is);
  return img;
}

}  // namespace sesdf
