#pragma once

#include <cstdint>

#include "sesdf/body/body_model.hpp"

namespace sesdf {

// Joint indices of the procedural humanoid.
enum BodyJoint : int {
  kPelvis, kSpine, kNeck, kHead,
  kLeftShoulder, kLeftElbow, kLeftWrist,
  kRightShoulder, kRightElbow, kRightWrist,
  kLeftHip, kLeftKnee, kLeftAnkle,
  kRightHip, kRightKnee, kRightAnkle,
  kNumBodyJoints
};

// Capsule-limb humanoid in an A-pose: y up, facing -z, feet near y = 0,
// about 1.75 units tall. `resolution` is the number of lattice cells around
// the circumference of the thinnest limb (>= 8). `seed` jitters proportions
// by a few percent; seed 0 gives the canonical body.
BodyModel make_procedural_template(uint64_t seed = 0, int resolution = 8);

}  // namespace sesdf
