#include "sesdf/recon/scene_inputs.hpp"

#include <fstream>

#include "sesdf/body/model_io.hpp"

namespace sesdf {

std::unique_ptr<BodyContext> make_body_context(const BodyModel& model, const BodyParams& params) {
  return std::make_unique<BodyContext>(lbs_forward(model, params), model.dominant_joint(), model.num_joints(),
                                       kSpaceVolumeResolution);
}

void save_fit(const SceneFit& fit, const std::filesystem::path& path) {
  nlohmann::json rigs = nlohmann::json::array();
  for (const ViewRig& r : fit.rigs) rigs.push_back(rig_to_json(r));
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << nlohmann::json{{"params", params_to_json(fit.params)}, {"rigs", rigs}, {"report", fit.report.to_json()}}.dump(2)
     << '\n';
}

SceneFit load_fit(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    SceneFit fit;
    fit.params = params_from_json(j.at("params"));
    for (const auto& r : j.at("rigs")) fit.rigs.push_back(rig_from_json(r));
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

SceneState ground_truth_state(const Scene& scene) { return {scene.params, scene.rigs}; }

std::vector<ViewInput> make_view_inputs(const Scene& scene, const std::vector<ViewRig>& rigs,
                                        const std::vector<int>& views) {
  if (rigs.size() != scene.features.size()) throw Error("rig count does not match the scene's views");
  std::vector<int> idx = views;
  if (idx.empty()) {
    for (std::size_t k = 0; k < rigs.size(); ++k) idx.push_back(static_cast<int>(k));
  }
  std::vector<ViewInput> out;
  for (int k : idx) {
    if (k < 0 || k >= static_cast<int>(rigs.size())) throw Error("view index out of range");
    out.push_back({rigs[k], scene.features[k]});
  }
  return out;
}

SceneSamples make_scene_samples(const Scene& scene, const SamplingConfig& config, uint64_t seed) {
  const BodyModel& model = scene_body_model(scene.config);
  const auto body = make_body_context(model, scene.params);
  const MeshQueries gt(scene.gt);
  Rng rng(seed);
  return build_scene_samples(*body, make_view_inputs(scene, scene.rigs), gt, config, rng);
}

}  // namespace sesdf
