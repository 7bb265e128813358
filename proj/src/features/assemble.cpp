#include "sesdf/features/assemble.hpp"

#include "sesdf/geometry/triangle.hpp"

namespace sesdf {

BodyContext::BodyContext(TriangleMesh body, const std::vector<int>& part, int parts, int volume_resolution,
                         double inflation)
    : queries_(std::move(body)) {
  if (queries_.mesh().empty()) throw Error("BodyContext: no fitted body mesh");
  normals_ = compute_vertex_normals(queries_.mesh());
  bounds_ = queries_.mesh().bounds().inflated(inflation);
  if (kVolumeOffsetChannels + kVolumeNormalChannels + parts > kMaxSpaceChannels) {
    throw Error("BodyContext: too many body parts for the space feature");
  }
  TriangleMesh with_normals = queries_.mesh();
  with_normals.vertex_normals = normals_;
  volume_ = splat_volume(with_normals, part, parts, bounds_, volume_resolution);
}

BodyContext::Probe BodyContext::probe(const Vec3& x) const {
  const SdfQuery q = queries_.signed_distance(x);
  Probe p;
  p.d = q.distance;
  p.closest_face = q.closest_face;
  p.closest_point = q.closest_point;
  const TriangleMesh& m = queries_.mesh();
  const Face& f = m.faces[q.closest_face];
  const Vec3 b =
      closest_point_on_triangle(q.closest_point, m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]]).barycentric;
  const Vec3 n = b[0] * normals_[f[0]] + b[1] * normals_[f[1]] + b[2] * normals_[f[2]];
  p.n = n.norm() > 1e-12 ? n.normalized() : q.normal;
  return p;
}

void assemble_point_feature(const BodyContext& body, const std::vector<ViewInput>& views, const Vec3& x,
                            const BodyContext::Probe& probe, std::vector<PointTuple>& out) {
  out.resize(views.size());
  std::array<double, kMaxSpaceChannels> space{};
  sample_space_channels(body.volume(), x, space.data());
  for (std::size_t i = 0; i < views.size(); ++i) {
    PointTuple& t = out[i];
    const Projection pr = project_orthographic(views[i].rig, x);
    t.view = static_cast<int>(i);
    t.uv = pr.uv;
    t.z = pr.depth;
    sample_pixel_channels(views[i].image, pr.uv.x(), pr.uv.y(), t.image.data());
    t.space = space;
    t.space_channels = body.volume().channels;
    t.d = probe.d;
    t.n = probe.n;
  }
}

std::vector<PointTuple> assemble_point_feature(const BodyContext& body, const std::vector<ViewInput>& views,
                                               const Vec3& x) {
  std::vector<PointTuple> out;
  assemble_point_feature(body, views, x, body.probe(x), out);
  return out;
}

}  // namespace sesdf
