#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sesdf/body/procedural.hpp"
#include "sesdf/calib/observation.hpp"
#include "sesdf/calib/raster.hpp"
#include "sesdf/calib/refine.hpp"
#include "sesdf/geometry/mesh_queries.hpp"
#include "sesdf/geometry/primitives.hpp"
#include "sesdf/geometry/rotation.hpp"
#include "sesdf/util/log.hpp"
#include "support/oracles.hpp"

namespace sesdf {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const BodyModel& body() {
  static const BodyModel m = make_procedural_template(0, 8);
  return m;
}

struct BodyScene {
  BodyParams gt;
  std::vector<ViewRig> rigs;
  std::vector<Observation> obs;
  double diagonal = 0.0;
};

BodyScene make_scene(uint64_t seed, int views, int image) {
  const BodyModel& m = body();
  Rng rng(seed);
  BodyScene s;
  s.gt = BodyParams::zeros(m);
  for (int k = 0; k < m.num_shape(); ++k) s.gt.beta[k] = normal(rng, 0, 0.5);
  for (int j = 1; j < m.num_joints(); ++j) s.gt.theta[j] = 0.15 * Vec3(normal(rng), normal(rng), normal(rng));
  s.gt.theta[0] = Vec3(0, uniform(rng, -3, 3), 0);
  const TriangleMesh posed = lbs_forward(m, s.gt);
  s.diagonal = posed.bounds().diagonal();
  for (int i = 0; i < views; ++i) {
    ViewRig r;
    r.width = r.height = image;
    r.rotation = rotation_y(i * 2.0 * std::numbers::pi / views);
    r.ortho_scale = 0.85 * image / s.diagonal;
    r.translation = -(r.rotation * posed.bounds().center());
    r.translation.z() = 0;
    s.rigs.push_back(r);
    s.obs.push_back({project_joints(m, s.gt, r), rasterize_silhouette(posed, r)});
  }
  return s;
}

double max_relative_rotation_error(const std::vector<ViewRig>& a, const std::vector<ViewRig>& b) {
  double e = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    e = std::max(e, rotation_angle_between(a[i].rotation * a[0].rotation.transpose(),
                                           b[i].rotation * b[0].rotation.transpose()));
  }
  return e;
}

double max_rmse(const FitReport& r) {
  double e = 0.0;
  for (const ViewReport& v : r.views) e = std::max(e, v.keypoint_rmse);
  return e;
}

TEST(Project, Examples) {
  ViewRig rig;
  const Projection a = project_orthographic(rig, Vec3(0, 0, 0));
  EXPECT_EQ(a.uv, Vec2(256, 256));
  EXPECT_EQ(a.depth, 0.0);
  rig.ortho_scale = 100;
  EXPECT_EQ(project_orthographic(rig, Vec3(1, 0, 0)).uv, Vec2(356, 256));
  ViewRig yaw = rig;
  yaw.rotation = rotation_y(std::numbers::pi / 2);
  const Projection b = project_orthographic(yaw, Vec3(0, 0, 1));
  EXPECT_NEAR((b.uv - Vec2(356, 256)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(b.depth, 0.0, 1e-12);
  EXPECT_NEAR((unproject(yaw, b.uv, b.depth) - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
}

TEST(Raster, CubeIsCenteredSquare) {
  ViewRig rig;
  rig.ortho_scale = 100;
  const Mask m = rasterize_silhouette(make_cube(), rig);
  EXPECT_EQ(m.count(), 200u * 200u);
  for (int j = 0; j < 512; ++j) {
    for (int i = 0; i < 512; ++i) {
      const bool inside = i >= 156 && i < 356 && j >= 156 && j < 356;
      ASSERT_EQ(m.at(i, j), inside ? 1 : 0) << i << "," << j;
    }
  }
}

TEST(Raster, OffScreenMeshIsEmpty) {
  ViewRig rig;
  rig.ortho_scale = 100;
  rig.translation = Vec3(10, 0, 0);
  EXPECT_EQ(rasterize_silhouette(make_cube(), rig).count(), 0u);
}

TEST(Raster, IcosphereDiskArea) {
  ViewRig rig;
  rig.ortho_scale = 100;
  const double area = static_cast<double>(rasterize_silhouette(make_icosphere(1.0, 3), rig).count());
  EXPECT_NEAR(area / (std::numbers::pi * 1e4), 1.0, 0.02);
}

TEST(Raster, MatchesRayCasting) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const MeshQueries q(oracle::random_star_mesh(seed));
    ViewRig rig;
    rig.width = rig.height = 96;
    rig.ortho_scale = 20;
    rig.rotation = axis_angle_to_matrix(Vec3(0.3 * seed, -0.7, 0.2));
    const Mask m = rasterize_silhouette(q.mesh(), rig);
    for (int j = 0; j < rig.height; ++j) {
      for (int i = 0; i < rig.width; ++i) {
        const Vec3 o = unproject(rig, Vec2(i + 0.5, j + 0.5), -100.0);
        const bool hit = q.ray_nearest_hit(o, rig.forward()).has_value();
        ASSERT_EQ(m.at(i, j) == 1, hit) << seed << ": " << i << "," << j;
      }
    }
  }
}

TEST(Raster, StridedEqualsSubsampled) {
  const BodyScene s = make_scene(3, 1, 256);
  const TriangleMesh posed = lbs_forward(body(), s.gt);
  EXPECT_EQ(rasterize_silhouette(posed, s.rigs[0], 4), subsample(s.obs[0].mask, 4));
}

TEST(Iou, Examples) {
  Mask a(512, 512), b(512, 512), c(512, 512);
  for (int j = 100; j < 300; ++j) {
    for (int i = 100; i < 300; ++i) {
      a.at(i, j) = 1;
      b.at(i + 100, j) = 1;
    }
  }
  for (int j = 400; j < 410; ++j) c.at(5, j) = 1;
  EXPECT_EQ(silhouette_iou(a, a), 1.0);
  EXPECT_EQ(silhouette_iou(a, c), 0.0);
  EXPECT_NEAR(silhouette_iou(a, b), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(silhouette_iou(a, Mask(10, 10)), Error);
}

class CalibIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "sesdf_calib_io";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CalibIo, ObservationRoundTrip) {
  const BodyScene s = make_scene(4, 1, 128);
  Observation obs = s.obs[0];
  obs.keypoints[3].visible = false;
  save_observation(obs, body().joint_names, dir_ / "view_0");
  const Observation r = load_observation(dir_ / "view_0", body().joint_names);
  EXPECT_EQ(r.mask, obs.mask);
  for (std::size_t k = 0; k < obs.keypoints.size(); ++k) {
    EXPECT_EQ(r.keypoints[k].uv, obs.keypoints[k].uv);
    EXPECT_EQ(r.keypoints[k].visible, obs.keypoints[k].visible);
  }
}

TEST_F(CalibIo, RigRoundTripAndValidation) {
  ViewRig rig;
  rig.rotation = axis_angle_to_matrix(Vec3(0.1, 0.2, -0.3));
  rig.translation = Vec3(0.25, -1.0 / 3.0, 2.0);
  rig.ortho_scale = 123.456;
  const ViewRig r = rig_from_json(rig_to_json(rig));
  EXPECT_EQ(r.rotation, rig.rotation);
  EXPECT_EQ(r.translation, rig.translation);
  EXPECT_EQ(r.ortho_scale, rig.ortho_scale);
  nlohmann::json bad = rig_to_json(rig);
  bad["ortho_scale"] = -1.0;
  EXPECT_THROW(rig_from_json(bad), Error);
}

TEST_F(CalibIo, UnknownJointNameRejected) {
  std::ofstream(dir_ / "kp.json") << R"({"tail": [1, 2, 1]})";
  EXPECT_THROW(read_keypoints(dir_ / "kp.json", body().joint_names), Error);
}

TEST(InitShared, SingleViewPassthrough) {
  const BodyScene s = make_scene(5, 1, 128);
  const SharedFit f = init_shared_model(body(), {{s.gt, s.rigs[0]}});
  EXPECT_EQ(f.params.beta, s.gt.beta);
  EXPECT_EQ(f.params.theta, s.gt.theta);
  EXPECT_EQ(f.rigs[0].rotation, s.rigs[0].rotation);
  EXPECT_EQ(f.rigs[0].translation, s.rigs[0].translation);
}

TEST(InitShared, IdenticalFitsAndSymmetricRotations) {
  const BodyScene s = make_scene(6, 2, 128);
  const SharedFit f = init_shared_model(body(), {{s.gt, s.rigs[0]}, {s.gt, s.rigs[0]}});
  for (int j = 0; j < body().num_joints(); ++j) EXPECT_LT((f.params.theta[j] - s.gt.theta[j]).norm(), 1e-12);
  EXPECT_LT((f.params.beta - s.gt.beta).norm(), 1e-12);
  EXPECT_LT(rotation_angle_between(f.rigs[1].rotation, s.rigs[0].rotation), 1e-12);

  BodyParams a = BodyParams::zeros(body()), b = BodyParams::zeros(body());
  a.theta[kLeftElbow] = Vec3(0, 0, 10 * kDeg);
  b.theta[kLeftElbow] = Vec3(0, 0, -10 * kDeg);
  const SharedFit g = init_shared_model(body(), {{a, s.rigs[0]}, {b, s.rigs[1]}});
  EXPECT_LT(g.params.theta[kLeftElbow].norm(), 1e-12);
}

TEST(InitShared, EachViewKeepsItsGlobalOrientation) {
  const BodyScene s = make_scene(7, 3, 128);
  std::vector<PerViewFit> fits;
  for (int i = 0; i < 3; ++i) {
    BodyParams p = s.gt;
    p.theta[0] = compose_axis_angle(p.theta[0], Vec3(0.1 * i, -0.2, 0.05 * i));
    p.translation = Vec3(0.01 * i, 0.02, -0.03 * i);
    fits.push_back({p, s.rigs[i]});
  }
  const SharedFit f = init_shared_model(body(), fits);
  for (int i = 0; i < 3; ++i) {
    const auto expected = project_joints(body(), fits[i].params, fits[i].rig);
    const auto actual = project_joints(body(), f.params, f.rigs[i]);
    for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_LT((expected[k].uv - actual[k].uv).norm(), 1e-9);
  }
  EXPECT_THROW(init_shared_model(body(), {}), Error);
}

TEST(Refine, GroundTruthIsAFixedPoint) {
  const BodyScene s = make_scene(8, 3, 256);
  const RefineResult r = refine_joint(body(), s.gt, s.rigs, s.obs);
  EXPECT_EQ(r.report.accepted_updates, 0);
  EXPECT_EQ(max_rmse(r.report), 0.0);
  EXPECT_EQ(r.report.final_objective, 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.rigs[i].rotation, s.rigs[i].rotation);
}

TEST(Refine, SmallRigPerturbationConvergesExactly) {
  const BodyScene s = make_scene(9, 3, 256);
  Rng rng(1);
  std::vector<ViewRig> init = s.rigs;
  for (std::size_t i = 1; i < init.size(); ++i) init[i] = perturb_rig(init[i], 2.0, 0.01, s.diagonal, rng);
  const double before = combined_objective(body(), s.gt, init, s.obs);
  const RefineResult r = refine_joint(body(), s.gt, init, s.obs);
  EXPECT_LT(max_rmse(r.report), 1e-6);
  EXPECT_LE(r.report.final_objective, before);
  EXPECT_NEAR(combined_objective(body(), r.params, r.rigs, s.obs), r.report.final_objective, 1e-12);
  EXPECT_LT(max_relative_rotation_error(r.rigs, s.rigs), 1e-6);
}

TEST(Refine, GaugeFixedAcrossGlobalReparameterizations) {
  const BodyScene s = make_scene(10, 3, 256);
  const Vec3 p0 = pose_skeleton(body(), s.gt).joints[body().root()];
  std::vector<std::vector<ViewRig>> solutions;
  for (uint64_t seed : {21u, 22u}) {
    Rng rng(seed);
    const Mat3 G = axis_angle_to_matrix(Vec3(normal(rng), normal(rng), normal(rng)) * 0.5);
    BodyParams p = s.gt;
    p.theta[0] = matrix_to_axis_angle(G * axis_angle_to_matrix(s.gt.theta[0]));
    std::vector<ViewRig> rigs = s.rigs;
    for (ViewRig& r : rigs) {
      const Mat3 R = r.rotation * G.transpose();
      r.translation = r.translation + r.rotation * p0 - R * p0;
      r.rotation = R;
    }
    for (std::size_t i = 1; i < rigs.size(); ++i) rigs[i] = perturb_rig(rigs[i], 2.0, 0.0, s.diagonal, rng);
    solutions.push_back(refine_joint(body(), p, rigs, s.obs).rigs);
  }
  EXPECT_LT(max_relative_rotation_error(solutions[0], solutions[1]), 1e-6);
}

TEST(Refine, KeypointFreeViewUsesSilhouette) {
  log::set_quiet(true);
  BodyScene s = make_scene(11, 3, 256);
  for (Keypoint& k : s.obs[2].keypoints) k.visible = false;
  Rng rng(3);
  std::vector<ViewRig> init = s.rigs;
  init[2] = perturb_rig(init[2], 0.0, 0.02, s.diagonal, rng);
  const TriangleMesh posed = lbs_forward(body(), s.gt);
  const double iou_before = silhouette_iou(rasterize_silhouette(posed, init[2]), s.obs[2].mask);
  const RefineResult r = refine_joint(body(), s.gt, init, s.obs);
  log::set_quiet(false);
  EXPECT_TRUE(r.report.views[2].keypoint_free);
  EXPECT_FALSE(r.report.views[0].keypoint_free);
  EXPECT_GT(r.report.views[2].iou, iou_before);
  EXPECT_GT(r.report.views[2].iou, 0.95);
}

TEST(Refine, UnsolvableWithoutKeypoints) {
  BodyScene s = make_scene(12, 2, 128);
  for (Observation& o : s.obs) {
    for (std::size_t k = 4; k < o.keypoints.size(); ++k) o.keypoints[k].visible = false;
    o.keypoints[0].visible = false;
  }
  EXPECT_THROW(refine_joint(body(), s.gt, s.rigs, s.obs), Error);
}

TEST(Refine, ReportJson) {
  FitReport r;
  r.views.push_back({0.5, 0.9, 16, false});
  r.views.push_back({0.0, 0.7, 0, true});
  const nlohmann::json j = r.to_json();
  EXPECT_NEAR(j["mean_iou"].get<double>(), 0.8, 1e-15);
  EXPECT_TRUE(j["views"][1]["keypoint_free"].get<bool>());
}

TEST(Initialize, KeypointYawSearchFindsFrontView) {
  const BodyModel& m = body();
  BodyScene s = make_scene(13, 1, 256);
  BodyParams rest = BodyParams::zeros(m);
  s.obs[0].keypoints = project_joints(m, rest, s.rigs[0]);
  const auto fits = initialize_from_keypoints(m, s.obs, 256, 256);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_NEAR(fits[0].rig.ortho_scale, s.rigs[0].ortho_scale, 1e-6 * s.rigs[0].ortho_scale);
  const auto kp = project_joints(m, fits[0].params, fits[0].rig);
  for (std::size_t k = 0; k < kp.size(); ++k) EXPECT_LT((kp[k].uv - s.obs[0].keypoints[k].uv).norm(), 1e-6);
}

}  // namespace
}  // namespace sesdf
