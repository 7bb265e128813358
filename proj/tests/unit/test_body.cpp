#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sesdf/body/model_io.hpp"
#include "sesdf/body/procedural.hpp"
#include "sesdf/geometry/rotation.hpp"
#include "sesdf/util/rng.hpp"

namespace sesdf {
namespace {

const BodyModel& body() {
  static const BodyModel m = make_procedural_template(0, 8);
  return m;
}

BodyParams random_params(const BodyModel& m, uint64_t seed, double pose_scale = 0.3) {
  Rng rng(seed);
  BodyParams p = BodyParams::zeros(m);
  for (int k = 0; k < m.num_shape(); ++k) p.beta[k] = normal(rng, 0.0, 0.7);
  for (int k = 0; k < m.num_expr(); ++k) p.phi[k] = normal(rng, 0.0, 1.0);
  for (Vec3& t : p.theta) t = pose_scale * Vec3(normal(rng), normal(rng), normal(rng));
  p.translation = Vec3(normal(rng), normal(rng), normal(rng)) * 0.1;
  return p;
}

double max_vertex_error(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, (a[i] - b[i]).norm());
  return e;
}

// Root at the origin, child joint at (1,0,0); vertex 2 belongs to the child.
BodyModel two_bone_chain() {
  BodyModel m;
  m.template_mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  m.template_mesh.faces = {{0, 1, 2}};
  m.parents = {-1, 0};
  m.joint_regressor = {{{0, 1.0}}, {{1, 1.0}}};
  m.skin_weights = Eigen::MatrixXd::Zero(3, 2);
  m.skin_weights(0, 0) = 1.0;
  m.skin_weights(1, 1) = 1.0;
  m.skin_weights(2, 1) = 1.0;
  return m;
}

TEST(Lbs, RestPoseReproducesTemplateExactly) {
  const BodyModel& m = body();
  const TriangleMesh out = lbs_forward(m, BodyParams::zeros(m));
  ASSERT_EQ(out.num_vertices(), m.template_mesh.num_vertices());
  for (std::size_t i = 0; i < out.num_vertices(); ++i) EXPECT_EQ(out.vertices[i], m.template_mesh.vertices[i]);
  EXPECT_EQ(out.faces, m.template_mesh.faces);
}

TEST(Lbs, UnitBetaAddsFirstShapeField) {
  const BodyModel& m = body();
  BodyParams p = BodyParams::zeros(m);
  p.beta[0] = 1.0;
  const TriangleMesh out = lbs_forward(m, p);
  for (std::size_t i = 0; i < out.num_vertices(); ++i) {
    EXPECT_EQ(out.vertices[i], m.template_mesh.vertices[i] + m.shape_basis[0][i]);
  }
}

TEST(Lbs, TwoBoneChainChildRotation) {
  const BodyModel m = two_bone_chain();
  m.validate();
  BodyParams p = BodyParams::zeros(m);
  p.theta[1] = Vec3(0, 0, std::numbers::pi / 2);
  const TriangleMesh out = lbs_forward(m, p);
  EXPECT_NEAR((out.vertices[2] - Vec3(1, 1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((out.vertices[1] - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_EQ(out.vertices[0], Vec3(0, 0, 0));
}

TEST(Lbs, GlobalRigidMotionThroughRootAndTranslation) {
  const BodyModel& m = body();
  BodyParams p = random_params(m, 3);
  const TriangleMesh base = lbs_forward(m, p);
  const Skeleton s0 = pose_skeleton(m, p);
  const Vec3 root_rot(0.3, -1.1, 0.7);
  const Vec3 shift(0.2, -0.4, 1.5);
  // Compose an extra rigid motion about the root joint into theta_root.
  const Mat3 g = axis_angle_to_matrix(root_rot);
  BodyParams q = p;
  q.theta[m.root()] = matrix_to_axis_angle(g * axis_angle_to_matrix(p.theta[m.root()]));
  q.translation = p.translation + shift;
  const TriangleMesh moved = lbs_forward(m, q);
  const Vec3 pivot = s0.joints[m.root()];
  std::vector<Vec3> expected(base.num_vertices());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = g * (base.vertices[i] - pivot) + pivot + shift;
  EXPECT_LT(max_vertex_error(moved.vertices, expected), 1e-6);
}

TEST(Lbs, AffineInShapeAndExpression) {
  const BodyModel& m = body();
  BodyParams a = BodyParams::zeros(m), b = BodyParams::zeros(m), ab = BodyParams::zeros(m);
  Rng rng(5);
  for (int k = 0; k < m.num_shape(); ++k) {
    a.beta[k] = normal(rng);
    b.beta[k] = normal(rng);
  }
  for (int k = 0; k < m.num_expr(); ++k) {
    a.phi[k] = normal(rng);
    b.phi[k] = normal(rng);
  }
  ab.beta = 0.3 * a.beta + 0.7 * b.beta;
  ab.phi = 0.3 * a.phi + 0.7 * b.phi;
  const auto va = lbs_forward(m, a).vertices, vb = lbs_forward(m, b).vertices, vab = lbs_forward(m, ab).vertices;
  double err = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) err = std::max(err, (vab[i] - (0.3 * va[i] + 0.7 * vb[i])).norm());
  EXPECT_LT(err, 1e-12);
}

TEST(Lbs, JointsFollowComposedTransforms) {
  const BodyModel& m = body();
  const Skeleton s = pose_skeleton(m, random_params(m, 8, 0.5));
  for (int j = 0; j < m.num_joints(); ++j) {
    EXPECT_LT((s.transform(j, s.rest_joints[j]) - s.joints[j]).norm(), 1e-12);
    const int p = m.parents[j];
    if (p >= 0) EXPECT_LT((s.transform(p, s.rest_joints[j]) - s.joints[j]).norm(), 1e-12);
  }
}

TEST(Lbs, PoseBlendshapesUseRotationFeatures) {
  BodyModel m = two_bone_chain();
  m.pose_basis.assign(9, std::vector<Vec3>(3, Vec3::Zero()));
  m.pose_basis[4][2] = Vec3(0, 0, 1);  // feature (R - I)(1,1)
  m.validate();
  BodyParams p = BodyParams::zeros(m);
  p.theta[1] = Vec3(std::numbers::pi / 2, 0, 0);  // R(1,1) = cos 90 = 0
  const TriangleMesh out = lbs_forward(m, p);
  // The corrective (0,0,-1) is applied before the child's 90 degree x rotation.
  EXPECT_NEAR((out.vertices[2] - Vec3(2, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(Lbs, DimensionMismatchRejected) {
  const BodyModel& m = body();
  BodyParams p = BodyParams::zeros(m);
  p.beta.resize(3);
  EXPECT_THROW(lbs_forward(m, p), Error);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const BodyModel& m = body();
  const BodyParams p = random_params(m, 11, 0.4);
  const JointJacobian jac = posed_joints_jacobian(m, p);
  const auto flat = [&](const BodyParams& q) {
    const Skeleton s = pose_skeleton(m, q);
    Eigen::VectorXd out(3 * m.num_joints());
    for (int j = 0; j < m.num_joints(); ++j) out.segment<3>(3 * j) = s.joints[j];
    return out;
  };
  const double eps = 1e-6;
  for (int k = 0; k < m.num_shape(); ++k) {
    BodyParams a = p, b = p;
    a.beta[k] += eps;
    b.beta[k] -= eps;
    const Eigen::VectorXd fd = (flat(a) - flat(b)) / (2 * eps);
    EXPECT_LT((fd - jac.d_beta.col(k)).norm(), 1e-7) << "beta " << k;
  }
  for (int j = 0; j < m.num_joints(); ++j) {
    for (int c = 0; c < 3; ++c) {
      BodyParams a = p, b = p;
      a.theta[j] = compose_axis_angle(p.theta[j], eps * Vec3::Unit(c));
      b.theta[j] = compose_axis_angle(p.theta[j], -eps * Vec3::Unit(c));
      const Eigen::VectorXd fd = (flat(a) - flat(b)) / (2 * eps);
      EXPECT_LT((fd - jac.d_theta.col(3 * j + c)).norm(), 1e-7) << "theta " << j << "," << c;
    }
  }
}

TEST(Procedural, WatertightGenusZero) {
  const TriangleMesh& t = body().template_mesh;
  EXPECT_TRUE(is_closed(t));
  EXPECT_EQ(euler_characteristic(t), 2);
  EXPECT_EQ(body().num_joints(), 16);
  EXPECT_EQ(body().num_shape(), 8);
  EXPECT_EQ(body().num_expr(), 2);
  EXPECT_GT(t.num_vertices(), 1000u);
  EXPECT_LT(t.num_vertices(), 6000u);
}

TEST(Procedural, Deterministic) {
  const BodyModel a = make_procedural_template(4, 8);
  const BodyModel b = make_procedural_template(4, 8);
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
  EXPECT_NE(model_to_json(a).dump(), model_to_json(body()).dump());
}

TEST(Procedural, SkinWeightRowsNormalized) {
  const BodyModel& m = body();
  for (Eigen::Index v = 0; v < m.skin_weights.rows(); ++v) {
    EXPECT_NEAR(m.skin_weights.row(v).sum(), 1.0, 1e-6);
    EXPECT_GE(m.skin_weights.row(v).minCoeff(), 0.0);
  }
}

TEST(Procedural, ShapeFieldsAreNotUniformScale) {
  const BodyModel& m = body();
  const auto& V = m.template_mesh.vertices;
  for (int k = 0; k < m.num_shape(); ++k) {
    // Best-fit s for d = s * v; a pure scale field would leave no residual.
    double num = 0.0, den = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
      num += m.shape_basis[k][i].dot(V[i]);
      den += V[i].squaredNorm();
      norm += m.shape_basis[k][i].squaredNorm();
    }
    double resid = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) resid += (m.shape_basis[k][i] - num / den * V[i]).squaredNorm();
    EXPECT_GT(norm, 0.0) << k;
    EXPECT_GT(resid, 0.1 * norm) << k;
  }
}

TEST(Procedural, LowResolutionRejected) { EXPECT_THROW(make_procedural_template(0, 7), Error); }

class ModelIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / "sesdf_model_io";
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ModelIo, RoundTripIsBitExact) {
  const BodyModel& m = body();
  save_model(m, dir_ / "m.json");
  const BodyModel r = load_model(dir_ / "m.json");
  EXPECT_EQ(r.template_mesh.vertices, m.template_mesh.vertices);
  EXPECT_EQ(r.template_mesh.faces, m.template_mesh.faces);
  EXPECT_EQ(r.shape_basis, m.shape_basis);
  EXPECT_EQ(r.expr_basis, m.expr_basis);
  EXPECT_EQ(r.pose_basis, m.pose_basis);
  EXPECT_EQ(r.skin_weights, m.skin_weights);
  EXPECT_EQ(r.parents, m.parents);
  EXPECT_EQ(r.joint_names, m.joint_names);
  ASSERT_EQ(r.joint_regressor.size(), m.joint_regressor.size());
  for (std::size_t j = 0; j < m.joint_regressor.size(); ++j) {
    ASSERT_EQ(r.joint_regressor[j].size(), m.joint_regressor[j].size());
    for (std::size_t e = 0; e < m.joint_regressor[j].size(); ++e) {
      EXPECT_EQ(r.joint_regressor[j][e].vertex, m.joint_regressor[j][e].vertex);
      EXPECT_EQ(r.joint_regressor[j][e].weight, m.joint_regressor[j][e].weight);
    }
  }
}

TEST_F(ModelIo, UnnormalizedWeightRowRejectedWithIndex) {
  BodyModel m = two_bone_chain();
  m.skin_weights(2, 1) = 0.5;
  save_model(m, dir_ / "bad.json");
  try {
    load_model(dir_ / "bad.json");
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST_F(ModelIo, FaceIndexOutOfRangeRejected) {
  BodyModel m = two_bone_chain();
  m.template_mesh.faces = {{0, 1, 3}};
  save_model(m, dir_ / "bad.json");
  EXPECT_THROW(load_model(dir_ / "bad.json"), Error);
}

TEST_F(ModelIo, SchemaViolationsRejected) {
  {
    std::ofstream f(dir_ / "missing.json");
    f << R"({"template_vertices": [], "faces": []})";
  }
  EXPECT_THROW(load_model(dir_ / "missing.json"), Error);
  {
    std::ofstream f(dir_ / "garbage.json");
    f << "not json";
  }
  EXPECT_THROW(load_model(dir_ / "garbage.json"), Error);
  BodyModel cyclic = two_bone_chain();
  cyclic.parents = {1, 0};
  EXPECT_THROW(cyclic.validate(), Error);
}

TEST(Params, JsonRoundTrip) {
  const BodyParams p = random_params(body(), 2);
  const BodyParams r = params_from_json(params_to_json(p));
  EXPECT_EQ(r.beta, p.beta);
  EXPECT_EQ(r.phi, p.phi);
  EXPECT_EQ(r.theta, p.theta);
  EXPECT_EQ(r.translation, p.translation);
}

TEST(Rotation, AxisAngleRoundTripAndMean) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 aa = Vec3(normal(rng), normal(rng), normal(rng)).normalized() * uniform(rng, 0.0, 3.1);
    EXPECT_LT((matrix_to_axis_angle(axis_angle_to_matrix(aa)) - aa).norm(), 1e-9);
  }
  const double ten = 10.0 * std::numbers::pi / 180.0;
  const Quat a(axis_angle_to_matrix(Vec3(0, 0, ten))), b(axis_angle_to_matrix(Vec3(0, 0, -ten)));
  EXPECT_LT(matrix_to_axis_angle(quaternion_mean({a, b}).toRotationMatrix()).norm(), 1e-12);
  Quat neg = a;
  neg.coeffs() = -a.coeffs();
  EXPECT_LT(rotation_angle_between(quaternion_mean({a, neg}).toRotationMatrix(), a.toRotationMatrix()), 1e-12);
}

}  // namespace
}  // namespace sesdf
