#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "sesdf/calib/refine.hpp"
#include "sesdf/nn/dataset.hpp"
#include "sesdf/synth/synth.hpp"

namespace sesdf {

constexpr int kSpaceVolumeResolution = 64;

// Body context of a posed body: part labels are each vertex's dominant joint.
std::unique_ptr<BodyContext> make_body_context(const BodyModel& model, const BodyParams& params);

// Calibrated state written by fit-views (fit.json in the scene directory).
struct SceneFit {
  BodyParams params;
  std::vector<ViewRig> rigs;
  FitReport report;
};
void save_fit(const SceneFit& fit, const std::filesystem::path& path);
SceneFit load_fit(const std::filesystem::path& path);

// Body parameters and rigs the networks should use for a scene.
struct SceneState {
  BodyParams params;
  std::vector<ViewRig> rigs;
};
SceneState ground_truth_state(const Scene& scene);

// View inputs for the chosen view indices (all when empty) under `rigs`.
std::vector<ViewInput> make_view_inputs(const Scene& scene, const std::vector<ViewRig>& rigs,
                                        const std::vector<int>& views = {});

// Training records of a scene under its ground-truth body and cameras.
SceneSamples make_scene_samples(const Scene& scene, const SamplingConfig& config, uint64_t seed);

}  // namespace sesdf
