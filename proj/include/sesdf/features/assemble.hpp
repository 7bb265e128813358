#pragma once

#include <array>
#include <vector>

#include "sesdf/calib/view_rig.hpp"
#include "sesdf/features/feature_image.hpp"
#include "sesdf/features/feature_volume.hpp"
#include "sesdf/geometry/mesh_queries.hpp"

namespace sesdf {

constexpr int kMaxSpaceChannels = 32;

// The fitted body in model space plus everything derived from it that the
// per-point features need. Immutable after construction.
class BodyContext {
 public:
  // part[v] labels each body vertex; the space volume covers the body bbox
  // inflated by `inflation` per side.
  BodyContext(TriangleMesh body, const std::vector<int>& part, int parts, int volume_resolution = 64,
              double inflation = 0.15);

  const MeshQueries& queries() const { return queries_; }
  const FeatureVolume& volume() const { return volume_; }
  const Aabb& bounds() const { return bounds_; }
  const std::vector<Vec3>& vertex_normals() const { return normals_; }

  struct Probe {
    double d = 0.0;          // signed distance to the body, negative inside
    Vec3 n = Vec3::Zero();   // interpolated body normal at the closest point
    int closest_face = -1;
    Vec3 closest_point = Vec3::Zero();
  };
  Probe probe(const Vec3& x) const;

 private:
  MeshQueries queries_;
  std::vector<Vec3> normals_;
  Aabb bounds_;
  FeatureVolume volume_;
};

struct ViewInput {
  ViewRig rig;
  FeatureImage image;
};

// Raw (pre-embedding) inputs of one view at one point. The body distance and
// normal are model-space quantities and therefore identical across views.
struct PointTuple {
  int view = 0;
  std::array<double, kImageChannels> image{};
  std::array<double, kMaxSpaceChannels> space{};
  int space_channels = 0;
  double d = 0.0;
  Vec3 n = Vec3::Zero();
  double z = 0.0;  // camera-frame depth of x in this view
  Vec2 uv = Vec2::Zero();
};

// One tuple per view in view order.
std::vector<PointTuple> assemble_point_feature(const BodyContext& body, const std::vector<ViewInput>& views,
                                               const Vec3& x);

// Same, reusing a body probe already computed for x.
void assemble_point_feature(const BodyContext& body, const std::vector<ViewInput>& views, const Vec3& x,
                            const BodyContext::Probe& probe, std::vector<PointTuple>& out);

}  // namespace sesdf
