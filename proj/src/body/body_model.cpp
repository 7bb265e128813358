#include "sesdf/body/body_model.hpp"

#include <cmath>
#include <string>

#include "sesdf/geometry/rotation.hpp"

namespace sesdf {

int BodyModel::root() const {
  for (int j = 0; j < num_joints(); ++j) {
    if (parents[j] < 0) return j;
  }
  return -1;
}

std::vector<int> BodyModel::topological_order() const {
  const int n = num_joints();
  std::vector<std::vector<int>> children(n);
  int root_joint = -1;
  for (int j = 0; j < n; ++j) {
    if (parents[j] < 0) {
      if (root_joint >= 0) throw Error("body model: more than one root joint");
      root_joint = j;
    } else if (parents[j] >= n) {
      throw Error("body model: parent index out of range at joint " + std::to_string(j));
    } else {
      children[parents[j]].push_back(j);
    }
  }
  if (root_joint < 0) throw Error("body model: no root joint");
  std::vector<int> order{root_joint};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (int c : children[order[i]]) order.push_back(c);
  }
  if (static_cast<int>(order.size()) != n) throw Error("body model: kinematic tree has a cycle");
  return order;
}

std::vector<int> BodyModel::dominant_joint() const {
  std::vector<int> out(num_vertices());
  for (int v = 0; v < num_vertices(); ++v) skin_weights.row(v).maxCoeff(&out[v]);
  return out;
}

void BodyModel::validate() const {
  template_mesh.validate();
  const int nv = num_vertices();
  const int nj = num_joints();
  if (nj == 0) throw Error("body model: no joints");
  topological_order();
  const auto check_fields = [&](const std::vector<std::vector<Vec3>>& basis, const char* name) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      if (static_cast<int>(basis[k].size()) != nv) {
        throw Error(std::string("body model: ") + name + " field " + std::to_string(k) + " has wrong vertex count");
      }
      for (const Vec3& d : basis[k]) {
        if (!d.allFinite()) throw Error(std::string("body model: non-finite value in ") + name);
      }
    }
  };
  check_fields(shape_basis, "shape_basis");
  check_fields(expr_basis, "expr_basis");
  check_fields(pose_basis, "pose_basis");
  if (!pose_basis.empty() && static_cast<int>(pose_basis.size()) != 9 * (nj - 1)) {
    throw Error("body model: pose_basis must have 9 * (joints - 1) fields");
  }
  if (static_cast<int>(joint_regressor.size()) != nj) throw Error("body model: joint_regressor row count != joints");
  for (int j = 0; j < nj; ++j) {
    double sum = 0.0;
    for (const RegressorEntry& e : joint_regressor[j]) {
      if (e.vertex < 0 || e.vertex >= nv) {
        throw Error("body model: joint_regressor vertex index out of range in row " + std::to_string(j));
      }
      sum += e.weight;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error("body model: joint_regressor row " + std::to_string(j) + " does not sum to 1");
  }
  if (skin_weights.rows() != nv || skin_weights.cols() != nj) throw Error("body model: skin_weights shape mismatch");
  for (int v = 0; v < nv; ++v) {
    if (!skin_weights.row(v).allFinite() || skin_weights.row(v).minCoeff() < 0.0) {
      throw Error("body model: skin weight row " + std::to_string(v) + " has a negative or non-finite entry");
    }
    const double sum = skin_weights.row(v).sum();
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error("body model: skin weight row " + std::to_string(v) + " sums to " + std::to_string(sum));
    }
  }
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != nj) {
    throw Error("body model: joint_names length != joints");
  }
}

BodyParams BodyParams::zeros(const BodyModel& model) {
  BodyParams p;
  p.beta = Eigen::VectorXd::Zero(model.num_shape());
  p.phi = Eigen::VectorXd::Zero(model.num_expr());
  p.theta.assign(model.num_joints(), Vec3::Zero());
  return p;
}

void BodyParams::check(const BodyModel& model) const {
  if (beta.size() != model.num_shape() || phi.size() != model.num_expr() ||
      static_cast<int>(theta.size()) != model.num_joints()) {
    throw Error("body params: dimensions do not match the model");
  }
  for (const Vec3& t : theta) {
    if (!t.allFinite()) throw Error("body params: non-finite rotation");
  }
  if (!beta.allFinite() || !phi.allFinite() || !translation.allFinite()) throw Error("body params: non-finite value");
}

namespace {

std::vector<Vec3> shaped_vertices(const BodyModel& model, const Eigen::VectorXd& beta) {
  std::vector<Vec3> v = model.template_mesh.vertices;
  for (int k = 0; k < model.num_shape(); ++k) {
    if (beta[k] == 0.0) continue;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += beta[k] * model.shape_basis[k][i];
  }
  return v;
}

std::vector<Vec3> regress(const BodyModel& model, const std::vector<Vec3>& vertices) {
  std::vector<Vec3> joints(model.num_joints(), Vec3::Zero());
  for (int j = 0; j < model.num_joints(); ++j) {
    for (const RegressorEntry& e : model.joint_regressor[j]) joints[j] += e.weight * vertices[e.vertex];
  }
  return joints;
}

}  // namespace

std::vector<Vec3> rest_joints(const BodyModel& model, const Eigen::VectorXd& beta) {
  return regress(model, shaped_vertices(model, beta));
}

Skeleton pose_skeleton(const BodyModel& model, const BodyParams& params) {
  params.check(model);
  Skeleton s;
  s.rest_joints = rest_joints(model, params.beta);
  const int nj = model.num_joints();
  s.world_rotation.resize(nj);
  s.joints.resize(nj);
  s.displacement.resize(nj);
  for (int j : model.topological_order()) {
    const Mat3 local = axis_angle_to_matrix(params.theta[j]);
    const int p = model.parents[j];
    if (p < 0) {
      s.world_rotation[j] = local;
      s.displacement[j] = params.translation;
    } else {
      s.world_rotation[j] = s.world_rotation[p] * local;
      s.displacement[j] =
          s.displacement[p] + (s.world_rotation[p] - Mat3::Identity()) * (s.rest_joints[j] - s.rest_joints[p]);
    }
    s.joints[j] = s.rest_joints[j] + s.displacement[j];
  }
  return s;
}

TriangleMesh lbs_forward(const BodyModel& model, const BodyParams& params) {
  const Skeleton s = pose_skeleton(model, params);
  std::vector<Vec3> v = shaped_vertices(model, params.beta);
  for (int k = 0; k < model.num_expr(); ++k) {
    if (params.phi[k] == 0.0) continue;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += params.phi[k] * model.expr_basis[k][i];
  }
  if (!model.pose_basis.empty()) {
    int f = 0;
    for (int j = 0; j < model.num_joints(); ++j) {
      if (j == model.root()) continue;
      const Mat3 feature = axis_angle_to_matrix(params.theta[j]) - Mat3::Identity();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c, ++f) {
          const double a = feature(r, c);
          if (a == 0.0) continue;
          for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * model.pose_basis[f][i];
        }
      }
    }
  }

  // Blended displacement x -> x + sum_j w_j ((R_j - I) x + t_j), so the rest
  // pose reproduces the shaped template bit-exactly.
  const int nj = model.num_joints();
  std::vector<Mat3> dr(nj);
  std::vector<Vec3> dt(nj);
  for (int j = 0; j < nj; ++j) {
    dr[j] = s.world_rotation[j] - Mat3::Identity();
    dt[j] = s.displacement[j] - dr[j] * s.rest_joints[j];
  }

  TriangleMesh out;
  out.faces = model.template_mesh.faces;
  out.vertices.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Mat3 r = Mat3::Zero();
    Vec3 t = Vec3::Zero();
    for (int j = 0; j < nj; ++j) {
      const double w = model.skin_weights(static_cast<Eigen::Index>(i), j);
      if (w == 0.0) continue;
      r += w * dr[j];
      t += w * dt[j];
    }
    out.vertices[i] = v[i] + (r * v[i] + t);
  }
  return out;
}

JointJacobian posed_joints_jacobian(const BodyModel& model, const BodyParams& params) {
  JointJacobian jac;
  jac.skeleton = pose_skeleton(model, params);
  const Skeleton& s = jac.skeleton;
  const int nj = model.num_joints();
  const int ks = model.num_shape();

  // d rest joints / d beta, per shape field.
  std::vector<std::vector<Vec3>> joint_fields(ks);
  for (int k = 0; k < ks; ++k) joint_fields[k] = regress(model, model.shape_basis[k]);

  jac.d_beta = Eigen::MatrixXd::Zero(3 * nj, ks);
  jac.d_theta = Eigen::MatrixXd::Zero(3 * nj, 3 * nj);
  const std::vector<int> order = model.topological_order();
  for (int j : order) {
    const int p = model.parents[j];
    for (int k = 0; k < ks; ++k) {
      Vec3 d = joint_fields[k][j];
      if (p >= 0) {
        d = Vec3(jac.d_beta.block(3 * p, k, 3, 1)) + s.world_rotation[p] * (joint_fields[k][j] - joint_fields[k][p]);
      }
      jac.d_beta.block(3 * j, k, 3, 1) = d;
    }
  }
  // A perturbation at joint a moves every descendant k by -[p_k - p_a]x Rw_a.
  for (int k = 0; k < nj; ++k) {
    for (int a = model.parents[k]; a >= 0; a = model.parents[a]) {
      jac.d_theta.block(3 * k, 3 * a, 3, 3) = -skew(s.joints[k] - s.joints[a]) * s.world_rotation[a];
    }
  }
  return jac;
}

Vec3 compose_axis_angle(const Vec3& theta, const Vec3& delta) {
  return matrix_to_axis_angle(axis_angle_to_matrix(theta) * axis_angle_to_matrix(delta));
}

}  // namespace sesdf
