#pragma once

#include <vector>

#include "json.hpp"
#include "sesdf/body/body_model.hpp"
#include "sesdf/calib/observation.hpp"
#include "sesdf/calib/view_rig.hpp"
#include "sesdf/util/rng.hpp"

namespace sesdf {

// A single-view fit: body parameters in that view's own world frame.
struct PerViewFit {
  BodyParams params;
  ViewRig rig;
};

struct SharedFit {
  BodyParams params;
  std::vector<ViewRig> rigs;
};

// Means of beta and phi, hemispherized quaternion mean per non-root joint.
// The root orientation and translation of the first view are kept for the
// shared body; every rig absorbs the difference between its own body root
// and the shared one, so each view still sees its own global orientation.
SharedFit init_shared_model(const BodyModel& model, const std::vector<PerViewFit>& fits);

struct RefineConfig {
  int max_outer_iterations = 50;
  double tolerance = 1e-6;      // on the combined objective
  double iou_weight = 100.0;    // px^2 per unit of (1 - mean IoU)
  int raster_stride = 4;        // 512^2 masks -> 128^2 rasters
  int lm_iterations = 25;
  int sweep_halvings = 3;
  int polish_stride = 1;        // second pass at this stride; 0 disables
  int polish_halvings = 2;
  bool sweep_shape = true;      // include beta/theta/phi in the IoU sweeps
};

struct ViewReport {
  double keypoint_rmse = 0.0;  // px, over visible keypoints
  double iou = 0.0;            // full resolution
  int visible_keypoints = 0;
  bool keypoint_free = false;
};

struct FitReport {
  std::vector<ViewReport> views;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int outer_iterations = 0;
  int accepted_updates = 0;

  double mean_iou() const;
  nlohmann::json to_json() const;
};

struct RefineResult {
  BodyParams params;
  std::vector<ViewRig> rigs;
  FitReport report;
};

// Alternates Levenberg-Marquardt on the keypoint reprojection residual
// (analytic Jacobians over beta, theta, rig rotations, xy translations and
// log ortho scales) with finite-difference coordinate sweeps on the combined
// objective  mean squared keypoint error + iou_weight * (1 - mean IoU).
// The first rig's rotation and every rig's depth translation are held fixed.
// Never returns a state with a higher objective than the input.
RefineResult refine_joint(const BodyModel& model, const BodyParams& shared, const std::vector<ViewRig>& rigs,
                          const std::vector<Observation>& observations, const RefineConfig& config = {});

// Combined objective of a state, as refine_joint measures it.
double combined_objective(const BodyModel& model, const BodyParams& params, const std::vector<ViewRig>& rigs,
                          const std::vector<Observation>& observations, const RefineConfig& config = {});

// Keypoints of the posed model joints under a rig; joints outside the image
// are marked invisible.
std::vector<Keypoint> project_joints(const BodyModel& model, const BodyParams& params, const ViewRig& rig);

// Real-data initialization: rest-pose body, per-view grid search over yaw
// with closed-form scale and image translation.
std::vector<PerViewFit> initialize_from_keypoints(const BodyModel& model, const std::vector<Observation>& observations,
                                                  int width, int height, double yaw_step_degrees = 10.0);

// Rotates the rig by `degrees` about a random axis and moves its xy
// translation by `translation_fraction * scene_diagonal` in a random direction.
ViewRig perturb_rig(const ViewRig& rig, double degrees, double translation_fraction, double scene_diagonal, Rng& rng);

// Image-plane distance between the posed root joints under two states, in
// scene units of the reference rig. Gauge invariant.
double root_offset(const BodyModel& model, const BodyParams& a, const ViewRig& rig_a, const BodyParams& b,
                   const ViewRig& rig_b);

}  // namespace sesdf
