#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sesdf/geometry/mesh.hpp"

namespace sesdf {

struct RegressorEntry {
  int vertex = 0;
  double weight = 0.0;
};

// Linear-blend-skinned body: template, linear blendshape bases, sparse joint
// regressor, per-vertex skin weights and a kinematic tree.
struct BodyModel {
  TriangleMesh template_mesh;
  std::vector<std::vector<Vec3>> shape_basis;  // K_s fields, one Vec3 per vertex
  std::vector<std::vector<Vec3>> expr_basis;   // K_e fields
  std::vector<std::vector<Vec3>> pose_basis;   // empty or 9 * (J - 1) fields
  std::vector<std::vector<RegressorEntry>> joint_regressor;  // per joint
  Eigen::MatrixXd skin_weights;                              // vertices x joints
  std::vector<int> parents;                                  // -1 for the root
  std::vector<std::string> joint_names;

  int num_vertices() const { return static_cast<int>(template_mesh.num_vertices()); }
  int num_joints() const { return static_cast<int>(parents.size()); }
  int num_shape() const { return static_cast<int>(shape_basis.size()); }
  int num_expr() const { return static_cast<int>(expr_basis.size()); }
  int root() const;
  // Parents before children.
  std::vector<int> topological_order() const;
  // Joint with the largest skin weight, per vertex.
  std::vector<int> dominant_joint() const;

  // Throws sesdf::Error naming the first violated invariant.
  void validate() const;
};

struct BodyParams {
  Eigen::VectorXd beta;
  std::vector<Vec3> theta;  // axis-angle per joint, root included
  Eigen::VectorXd phi;
  Vec3 translation = Vec3::Zero();

  static BodyParams zeros(const BodyModel& model);
  void check(const BodyModel& model) const;
};

// Rest-pose joints J(beta) regressed from the shape-displaced template.
std::vector<Vec3> rest_joints(const BodyModel& model, const Eigen::VectorXd& beta);

struct Skeleton {
  std::vector<Vec3> rest_joints;
  std::vector<Mat3> world_rotation;  // accumulated along the tree
  std::vector<Vec3> joints;          // posed, translation included
  std::vector<Vec3> displacement;    // joints - rest_joints, exactly zero at rest

  // Rigid transform carrying joint j's bone from rest to pose.
  Vec3 transform(int j, const Vec3& x) const {
    return x + (world_rotation[j] - Mat3::Identity()) * (x - rest_joints[j]) + displacement[j];
  }
};

Skeleton pose_skeleton(const BodyModel& model, const BodyParams& params);

// Posed vertices: blendshapes, then skinning by the skeleton's transforms.
TriangleMesh lbs_forward(const BodyModel& model, const BodyParams& params);

// Derivatives of the posed joints (3J rows). Rotation columns use a right
// perturbation theta_j <- log(exp(theta_j) exp(delta)), three per joint.
struct JointJacobian {
  Skeleton skeleton;
  Eigen::MatrixXd d_beta;   // 3J x K_s
  Eigen::MatrixXd d_theta;  // 3J x 3J
};
JointJacobian posed_joints_jacobian(const BodyModel& model, const BodyParams& params);

// Applies a right-perturbation step to an axis-angle vector.
Vec3 compose_axis_angle(const Vec3& theta, const Vec3& delta);

}  // namespace sesdf
