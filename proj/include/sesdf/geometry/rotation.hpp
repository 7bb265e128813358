#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "sesdf/common.hpp"

namespace sesdf {

using Quat = Eigen::Quaterniond;

Mat3 skew(const Vec3& v);
Mat3 axis_angle_to_matrix(const Vec3& aa);
Vec3 matrix_to_axis_angle(const Mat3& r);  // angle in [0, pi]
// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);
Mat3 rotation_y(double radians);
// Projects an approximately orthonormal matrix onto SO(3).
Mat3 orthonormalize(const Mat3& m);

// Hemispherized unit-quaternion mean; signs are aligned with the first entry.
Quat quaternion_mean(const std::vector<Quat>& qs);

}  // namespace sesdf
