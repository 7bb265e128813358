#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sesdf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// All recoverable failures (bad input files, violated preconditions) surface
// as sesdf::Error. Programming errors use assert.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sesdf
