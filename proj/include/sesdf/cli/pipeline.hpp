#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sesdf/fusion/fusion.hpp"
#include "sesdf/metrics/metrics.hpp"
#include "sesdf/nn/gradcheck.hpp"
#include "sesdf/nn/model.hpp"
#include "sesdf/nn/train.hpp"
#include "sesdf/recon/recon.hpp"
#include "sesdf/recon/scene_inputs.hpp"

namespace sesdf {

// Dataset layout written by synth-gen: one scene directory per seed.
struct DatasetConfig {
  int scenes = 24;
  uint64_t first_seed = 0;
  SceneConfig scene;
};
std::vector<std::filesystem::path> generate_dataset(const std::filesystem::path& root, const DatasetConfig& config);
std::filesystem::path scene_dir_name(uint64_t seed);

// Calibration of a scene.
//  jitter_init: start from the scene's own body with per-view noise and the
//    true rigs perturbed by jitter_degrees / jitter_translation. The
//    synthetic recovery experiment.
//  otherwise: keypoint-only initialization, as for data without any prior.
struct FitOptions {
  bool jitter_init = false;
  double jitter_degrees = 5.0;
  double jitter_translation = 0.05;  // of the body bbox diagonal
  double shape_noise = 0.2;
  double pose_noise = 0.05;          // radians per joint
  uint64_t seed = 1;
  RefineConfig refine;
};
SceneFit fit_scene(const Scene& scene, const FitOptions& options);

struct CalibrationError {
  double rotation_degrees = 0.0;      // worst relative rotation to view 0
  double translation_fraction = 0.0;  // worst root offset / bbox diagonal
  double mean_iou = 0.0;
};
CalibrationError calibration_error(const Scene& scene, const SceneFit& fit);

// Which body and cameras the networks see.
enum class StateSource { kFit, kGroundTruth };
StateSource state_source_from_string(const std::string& name);
std::string to_string(StateSource s);
SceneState scene_state(const Scene& scene, const std::filesystem::path& scene_dir, StateSource source);

// Training records for every scene under `root`.
std::vector<SceneSamples> load_training_data(const std::filesystem::path& root, const SamplingConfig& sampling,
                                             uint64_t seed);

struct SceneReconOptions {
  int views = 0;  // first n views; 0 means all
  FusionMode fusion = FusionMode::kOcclusion;
  ReconConfig recon;
};

// Reconstruction from the first `views` views; grid bounds come from the
// posed body of `state`.
ReconResult reconstruct_scene(const ModelSet& model, const Scene& scene, const SceneState& state,
                              const SceneReconOptions& options);

struct FusionRow {
  FusionMode fusion = FusionMode::kOcclusion;
  double chamfer = 0.0;
  double p2s = 0.0;
};
// fusion,chamfer,p2s with one row per strategy.
void write_fusion_csv(const std::vector<FusionRow>& rows, const std::filesystem::path& path);

std::vector<FusionRow> ablate_fusion(const ModelSet& model, const Scene& scene, const SceneState& state,
                                     const SceneReconOptions& options, std::size_t metric_samples, uint64_t seed);

// Analytic against central-difference gradients for each architecture of
// every variant at eps = 1e-4, plus the joint loss at eps = 1e-5 (its
// high-frequency distance code needs the smaller step).
constexpr double kGradCheckTolerance = 1e-4;
struct GradCheckCase {
  std::string name;
  double eps = 0.0;
  GradCheckReport report;
  bool passed() const { return report.max_rel_error < kGradCheckTolerance && report.checked > 0; }
};
std::vector<GradCheckCase> gradcheck_suite(uint64_t seed);

}  // namespace sesdf
