#include "sesdf/body/procedural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sesdf/geometry/marching_cubes.hpp"
#include "sesdf/util/rng.hpp"

namespace sesdf {
namespace {

struct Limb {
  Vec3 a, b;
  double ra, rb;
  Vec3 squash = Vec3::Ones();  // per-axis scale applied to the offset
  int joint = -1;              // skinning owner
};

// Tapered-capsule implicit value (not an exact distance).
double limb_value(const Limb& l, const Vec3& p, Vec3* axis_point = nullptr) {
  const Vec3 ab = l.b - l.a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - l.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  const Vec3 c = l.a + t * ab;
  if (axis_point) *axis_point = c;
  return (p - c).cwiseProduct(l.squash).norm() - ((1.0 - t) * l.ra + t * l.rb);
}

double smooth_min(double a, double b, double k) {
  const double h = std::max(k - std::abs(a - b), 0.0) / k;
  return std::min(a, b) - h * h * k * 0.25;
}

// Segment distance used for skin weights (the bone each joint rotates).
double segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

struct Layout {
  std::array<Vec3, kNumBodyJoints> joints;
  Vec3 left_hand_tip, right_hand_tip, left_toe, right_toe, head_top;
  std::vector<Limb> shapes;
  std::vector<Limb> bones;  // radius ignored
};

Layout make_layout(uint64_t seed) {
  Rng rng(mix_seed(seed, 17));
  const auto jitter = [&](double v) { return seed == 0 ? v : v * (1.0 + uniform(rng, -0.03, 0.03)); };
  Layout L;
  auto& J = L.joints;
  const double arm_angle = 40.0 * std::numbers::pi / 180.0;
  const double shoulder_x = jitter(0.17), upper_arm = jitter(0.27), forearm = jitter(0.24);
  const double hip_x = jitter(0.09), thigh = jitter(0.40), shin = jitter(0.40);
  J[kPelvis] = {0, 0.95, 0};
  J[kSpine] = {0, 1.12, 0};
  J[kNeck] = {0, 1.42, 0};
  J[kHead] = {0, 1.54, 0};
  for (int side = 0; side < 2; ++side) {
    const double s = side == 0 ? 1.0 : -1.0;
    const Vec3 dir(s * std::cos(arm_angle), -std::sin(arm_angle), 0);
    const int sh = side == 0 ? kLeftShoulder : kRightShoulder;
    J[sh] = {s * shoulder_x, 1.38, 0};
    J[sh + 1] = J[sh] + upper_arm * dir;
    J[sh + 2] = J[sh + 1] + forearm * dir;
    (side == 0 ? L.left_hand_tip : L.right_hand_tip) = J[sh + 2] + 0.1 * dir;
    const int hip = side == 0 ? kLeftHip : kRightHip;
    J[hip] = {s * hip_x, 0.90, 0};
    J[hip + 1] = J[hip] + Vec3(s * 0.01, -thigh, 0.01);
    J[hip + 2] = J[hip + 1] + Vec3(0, -shin, 0.01);
    (side == 0 ? L.left_toe : L.right_toe) = J[hip + 2] + Vec3(0, -0.06, -0.14);
  }
  L.head_top = {0, 1.73, -0.01};

  const double r_torso = jitter(0.14), r_thigh = jitter(0.08), r_arm = jitter(0.05);
  const Vec3 torso_squash(1.0, 1.0, 1.4);
  auto& S = L.shapes;
  S.push_back({{-0.08, 0.93, 0}, {0.08, 0.93, 0}, 0.12, 0.12, {1.0, 1.0, 1.3}});
  S.push_back({{0, 0.95, 0}, {0, 1.28, 0}, 0.92 * r_torso, r_torso, torso_squash});
  S.push_back({{-0.13, 1.33, 0}, {0.13, 1.33, 0}, 0.08, 0.08, {1.0, 1.0, 1.2}});
  S.push_back({{0, 1.36, 0}, {0, 1.50, 0}, 0.05, 0.05});
  S.push_back({{0, 1.60, -0.01}, {0, 1.64, -0.01}, 0.095, 0.095});
  for (int side = 0; side < 2; ++side) {
    const int sh = side == 0 ? kLeftShoulder : kRightShoulder;
    const Vec3 tip = side == 0 ? L.left_hand_tip : L.right_hand_tip;
    S.push_back({J[sh], J[sh + 1], r_arm, 0.84 * r_arm});
    S.push_back({J[sh + 1], J[sh + 2], 0.84 * r_arm, 0.64 * r_arm});
    S.push_back({J[sh + 2], tip, 0.7 * r_arm, 0.6 * r_arm});
    const int hip = side == 0 ? kLeftHip : kRightHip;
    const Vec3 toe = side == 0 ? L.left_toe : L.right_toe;
    S.push_back({J[hip], J[hip + 1], r_thigh, 0.69 * r_thigh});
    S.push_back({J[hip + 1], J[hip + 2], 0.69 * r_thigh, 0.48 * r_thigh});
    S.push_back({J[hip + 2], toe, 0.5 * r_thigh, 0.38 * r_thigh});
  }

  auto& B = L.bones;
  const auto bone = [&](const Vec3& a, const Vec3& b, int joint) { B.push_back({a, b, 0, 0, Vec3::Ones(), joint}); };
  bone(J[kLeftHip], J[kRightHip], kPelvis);
  bone(J[kPelvis], J[kSpine], kPelvis);
  bone(J[kSpine], Vec3(0, 1.36, 0), kSpine);
  bone(Vec3(-0.13, 1.36, 0), Vec3(0.13, 1.36, 0), kSpine);
  bone(J[kNeck], J[kHead], kNeck);
  bone(J[kHead], L.head_top, kHead);
  for (int side = 0; side < 2; ++side) {
    const int sh = side == 0 ? kLeftShoulder : kRightShoulder;
    bone(J[sh], J[sh + 1], sh);
    bone(J[sh + 1], J[sh + 2], sh + 1);
    bone(J[sh + 2], side == 0 ? L.left_hand_tip : L.right_hand_tip, sh + 2);
    const int hip = side == 0 ? kLeftHip : kRightHip;
    bone(J[hip], J[hip + 1], hip);
    bone(J[hip + 1], J[hip + 2], hip + 1);
    bone(J[hip + 2], side == 0 ? L.left_toe : L.right_toe, hip + 2);
  }
  return L;
}

double body_value(const Layout& L, const Vec3& p) {
  double f = 1e3;
  for (const Limb& s : L.shapes) f = smooth_min(f, limb_value(s, p), 0.025);
  return f;
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

BodyModel make_procedural_template(uint64_t seed, int resolution) {
  if (resolution < 8) throw Error("make_procedural_template: resolution must be >= 8");
  const Layout L = make_layout(seed);
  BodyModel model;
  model.parents = {-1, kPelvis, kSpine, kNeck,
                   kSpine, kLeftShoulder, kLeftElbow,
                   kSpine, kRightShoulder, kRightElbow,
                   kPelvis, kLeftHip, kLeftKnee,
                   kPelvis, kRightHip, kRightKnee};
  model.joint_names = {"pelvis", "spine", "neck", "head",
                       "left_shoulder", "left_elbow", "left_wrist",
                       "right_shoulder", "right_elbow", "right_wrist",
                       "left_hip", "left_knee", "left_ankle",
                       "right_hip", "right_knee", "right_ankle"};

  // Surface: iso-surface of the smooth union on a lattice whose spacing
  // resolves the thinnest limb. The small offset keeps lattice points off
  // the surface.
  double r_min = std::numeric_limits<double>::infinity();
  Aabb box;
  for (const Limb& s : L.shapes) {
    r_min = std::min({r_min, s.ra, s.rb});
    box.extend(s.a);
    box.extend(s.b);
  }
  const double h = 2.0 * std::numbers::pi * r_min / resolution;
  const Vec3 lo = box.lo - Vec3::Constant(0.2 + 0.37 * h);
  const Vec3 hi = box.hi + Vec3::Constant(0.2);
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / h)) + 1;
  ScalarGrid grid(dims, Aabb(lo, lo + h * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1)));
  for (std::size_t i = 0; i < grid.size(); ++i) grid.values[i] = -body_value(L, grid.point(i));
  model.template_mesh = marching_cubes(grid, 0.0);
  update_vertex_normals(model.template_mesh);
  const auto& V = model.template_mesh.vertices;
  const int nv = static_cast<int>(V.size());
  const int nj = kNumBodyJoints;

  // Skin weights: softmin over bone distances, sparsified.
  const double tau = 0.015;
  model.skin_weights = Eigen::MatrixXd::Zero(nv, nj);
  for (int v = 0; v < nv; ++v) {
    Eigen::VectorXd d = Eigen::VectorXd::Constant(nj, std::numeric_limits<double>::infinity());
    for (const Limb& b : L.bones) d[b.joint] = std::min(d[b.joint], segment_distance(b.a, b.b, V[v]));
    const double dmin = d.minCoeff();
    Eigen::VectorXd w = (-(d.array() - dmin) / tau).exp();
    w = (w.array() < 1e-4 * w.maxCoeff()).select(0.0, w);
    model.skin_weights.row(v) = w / w.sum();
  }

  // Joint regressor: Gaussian-weighted centroid of the vertices near each
  // joint.
  model.joint_regressor.resize(nj);
  for (int j = 0; j < nj; ++j) {
    double scale = 0.06;
    if (j == kPelvis || j == kSpine) scale = 0.12;
    for (int attempt = 0; model.joint_regressor[j].empty(); ++attempt, scale *= 1.5) {
      double sum = 0.0;
      std::vector<RegressorEntry> row;
      for (int v = 0; v < nv; ++v) {
        const double r2 = (V[v] - L.joints[j]).squaredNorm();
        if (r2 > 4.0 * scale * scale) continue;
        const double w = std::exp(-r2 / (2.0 * 0.25 * scale * scale));
        row.push_back({v, w});
        sum += w;
      }
      if (row.size() < 4) continue;
      for (RegressorEntry& e : row) e.weight /= sum;
      model.joint_regressor[j] = std::move(row);
    }
  }

  // Shape fields.
  const auto W = [&](int v, std::initializer_list<int> joints) {
    double s = 0.0;
    for (int j : joints) s += model.skin_weights(v, j);
    return s;
  };
  const Vec3 head_center(0, 1.62, -0.01);
  const Vec3 left_arm_dir = (L.joints[kLeftWrist] - L.joints[kLeftShoulder]).normalized();
  const Vec3 right_arm_dir = (L.joints[kRightWrist] - L.joints[kRightShoulder]).normalized();
  model.shape_basis.assign(8, std::vector<Vec3>(nv, Vec3::Zero()));
  model.expr_basis.assign(2, std::vector<Vec3>(nv, Vec3::Zero()));
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = V[v];
    auto& S = model.shape_basis;
    S[0][v] = Vec3(0, 0.05 * (p.y() - 0.95), 0);  // height
    Vec3 radial = Vec3::Zero();
    for (const Limb& b : L.bones) {
      Vec3 c;
      limb_value(b, p, &c);
      radial += model.skin_weights(v, b.joint) * (p - c) / double(b.joint == kPelvis || b.joint == kSpine ? 2 : 1);
    }
    S[1][v] = 0.15 * radial;  // girth
    S[2][v] = Vec3(0, -0.07 * std::max(0.0, 0.92 - p.y()), 0);  // leg length
    const double wl = W(v, {kLeftShoulder, kLeftElbow, kLeftWrist});
    const double wr = W(v, {kRightShoulder, kRightElbow, kRightWrist});
    S[3][v] = 0.08 * (wl * std::max(0.0, (p - L.joints[kLeftShoulder]).dot(left_arm_dir)) * left_arm_dir +
                      wr * std::max(0.0, (p - L.joints[kRightShoulder]).dot(right_arm_dir)) * right_arm_dir);
    S[4][v] = Vec3(0.04 * (wl - wr) + 0.04 * model.skin_weights(v, kSpine) * std::clamp(p.x() / 0.15, -1.0, 1.0) *
                                          smoothstep(1.15, 1.35, p.y()),
                   0, 0);  // shoulder width
    S[5][v] = Vec3(0, 0, -0.05 * std::exp(-std::pow(p.y() - 1.05, 2) / (2 * 0.08 * 0.08)) *
                             std::max(0.0, -p.z()) / 0.13);  // belly
    S[6][v] = 0.15 * model.skin_weights(v, kHead) * (p - head_center);  // head size
    S[7][v] = Vec3(0.05 * std::clamp(p.x() / 0.2, -1.0, 1.0) * std::exp(-std::pow(p.y() - 0.9, 2) / (2 * 0.12 * 0.12)) *
                       (1.0 - wl - wr),
                   0, 0);  // hip width
    const double wh = model.skin_weights(v, kHead);
    const Vec3 mouth(0, 1.58, -0.09), chin(0, 1.53, -0.07);
    model.expr_basis[0][v] = Vec3(0, 0, -0.01 * wh * std::exp(-(p - mouth).squaredNorm() / (2 * 0.03 * 0.03)));
    model.expr_basis[1][v] = Vec3(0, -0.01 * wh * std::exp(-(p - chin).squaredNorm() / (2 * 0.03 * 0.03)), 0);
  }
  model.validate();
  return model;
}

}  // namespace sesdf
