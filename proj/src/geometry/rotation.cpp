#include "sesdf/geometry/rotation.hpp"

#include <algorithm>
#include <cmath>

namespace sesdf {

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Mat3 axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-12) return Mat3::Identity() + skew(aa);
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

Vec3 matrix_to_axis_angle(const Mat3& r) {
  Quat q(r);
  q.normalize();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const double s = q.vec().norm();
  if (s < 1e-12) return 2.0 * q.vec();
  return 2.0 * std::atan2(s, q.w()) * q.vec() / s;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return matrix_to_axis_angle(a.transpose() * b).norm();
}

Mat3 rotation_y(double radians) { return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix(); }

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) = -u.col(2);
  return u * v.transpose();
}

Quat quaternion_mean(const std::vector<Quat>& qs) {
  if (qs.empty()) throw Error("quaternion_mean: empty input");
  Eigen::Vector4d sum = Eigen::Vector4d::Zero();
  const Eigen::Vector4d ref = qs.front().normalized().coeffs();
  for (const Quat& q : qs) {
    Eigen::Vector4d c = q.normalized().coeffs();
    if (c.dot(ref) < 0) c = -c;
    sum += c;
  }
  if (sum.norm() < 1e-12) return qs.front().normalized();
  Quat mean;
  mean.coeffs() = sum.normalized();
  return mean;
}

}  // namespace sesdf
