#include "sesdf/cli/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>

#include "sesdf/geometry/rotation.hpp"

namespace sesdf {

std::filesystem::path scene_dir_name(uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%05llu", static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<std::filesystem::path> generate_dataset(const std::filesystem::path& root, const DatasetConfig& config) {
  if (config.scenes < 1) throw Error("dataset needs at least one scene");
  std::filesystem::create_directories(root);
  std::vector<std::filesystem::path> out;
  for (int i = 0; i < config.scenes; ++i) {
    const uint64_t seed = config.first_seed + static_cast<uint64_t>(i);
    const std::filesystem::path dir = root / scene_dir_name(seed);
    export_scene(generate_scene(seed, config.scene), dir);
    out.push_back(dir);
  }
  return out;
}

SceneFit fit_scene(const Scene& scene, const FitOptions& options) {
  const BodyModel& model = scene_body_model(scene.config);
  SharedFit init;
  if (options.jitter_init) {
    const double diag = lbs_forward(model, scene.params).bounds().diagonal();
    Rng rng(options.seed);
    std::vector<PerViewFit> fits;
    for (const ViewRig& rig : scene.rigs) {
      PerViewFit f;
      f.params = scene.params;
      for (int k = 0; k < model.num_shape(); ++k) f.params.beta[k] += normal(rng, 0.0, options.shape_noise);
      for (int j = 1; j < model.num_joints(); ++j) {
        const Vec3 delta(normal(rng), normal(rng), normal(rng));
        f.params.theta[j] = compose_axis_angle(f.params.theta[j], options.pose_noise * delta);
      }
      f.rig = perturb_rig(rig, options.jitter_degrees, options.jitter_translation, diag, rng);
      fits.push_back(std::move(f));
    }
    init = init_shared_model(model, fits);
  } else {
    const ViewRig& r = scene.rigs.front();
    init = init_shared_model(model, initialize_from_keypoints(model, scene.observations, r.width, r.height));
  }
  RefineResult r = refine_joint(model, init.params, init.rigs, scene.observations, options.refine);
  return {std::move(r.params), std::move(r.rigs), std::move(r.report)};
}

CalibrationError calibration_error(const Scene& scene, const SceneFit& fit) {
  if (fit.rigs.size() != scene.rigs.size()) throw Error("fit and scene have different view counts");
  const BodyModel& model = scene_body_model(scene.config);
  const double diag = lbs_forward(model, scene.params).bounds().diagonal();
  CalibrationError e;
  const Mat3 est0 = fit.rigs[0].rotation.transpose(), true0 = scene.rigs[0].rotation.transpose();
  for (std::size_t i = 0; i < fit.rigs.size(); ++i) {
    const double angle = rotation_angle_between(fit.rigs[i].rotation * est0, scene.rigs[i].rotation * true0);
    e.rotation_degrees = std::max(e.rotation_degrees, angle * 180.0 / std::numbers::pi);
    const double offset = root_offset(model, scene.params, scene.rigs[i], fit.params, fit.rigs[i]);
    e.translation_fraction = std::max(e.translation_fraction, offset / diag);
  }
  e.mean_iou = fit.report.mean_iou();
  return e;
}

StateSource state_source_from_string(const std::string& name) {
  if (name == "fit") return StateSource::kFit;
  if (name == "gt") return StateSource::kGroundTruth;
  throw Error("unknown body source '" + name + "' (expected fit or gt)");
}

std::string to_string(StateSource s) { return s == StateSource::kFit ? "fit" : "gt"; }

SceneState scene_state(const Scene& scene, const std::filesystem::path& scene_dir, StateSource source) {
  if (source == StateSource::kGroundTruth) return ground_truth_state(scene);
  const std::filesystem::path path = scene_dir / "fit.json";
  if (!std::filesystem::exists(path)) throw Error(path.string() + " not found; run fit-views first or use --body gt");
  SceneFit fit = load_fit(path);
  if (fit.rigs.size() != scene.rigs.size()) throw Error(path.string() + ": view count does not match the scene");
  return {std::move(fit.params), std::move(fit.rigs)};
}

std::vector<SceneSamples> load_training_data(const std::filesystem::path& root, const SamplingConfig& sampling,
                                             uint64_t seed) {
  const std::vector<std::filesystem::path> dirs = list_scenes(root);
  if (dirs.empty()) throw Error("no scenes under " + root.string());
  std::vector<SceneSamples> data;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    data.push_back(make_scene_samples(load_scene(dirs[i]), sampling, mix_seed(seed, i)));
  }
  return data;
}

ReconResult reconstruct_scene(const ModelSet& model, const Scene& scene, const SceneState& state,
                              const SceneReconOptions& options) {
  const int available = static_cast<int>(state.rigs.size());
  if (options.views < 0 || options.views > available) {
    throw Error("--views must be in 1.." + std::to_string(available));
  }
  std::vector<int> idx;
  for (int k = 0; k < (options.views == 0 ? available : options.views); ++k) idx.push_back(k);
  const auto body = make_body_context(scene_body_model(scene.config), state.params);
  const NetworkField field(model, *body, make_view_inputs(scene, state.rigs, idx), options.fusion);
  return reconstruct(field, body->queries().mesh().bounds(), options.recon);
}

void write_fusion_csv(const std::vector<FusionRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os.precision(9);
  os << "fusion,chamfer,p2s\n";
  for (const FusionRow& r : rows) os << to_string(r.fusion) << ',' << r.chamfer << ',' << r.p2s << '\n';
  if (!os) throw Error("write failed: " + path.string());
}

std::vector<FusionRow> ablate_fusion(const ModelSet& model, const Scene& scene, const SceneState& state,
                                     const SceneReconOptions& options, std::size_t metric_samples, uint64_t seed) {
  std::vector<FusionRow> rows;
  for (FusionMode mode : {FusionMode::kOcclusion, FusionMode::kAverage, FusionMode::kNormal, FusionMode::kVisibility}) {
    SceneReconOptions o = options;
    o.fusion = mode;
    const ReconResult r = reconstruct_scene(model, scene, state, o);
    const ChamferResult c = chamfer_detail(r.mesh, scene.gt, metric_samples, seed);
    rows.push_back({mode, c.chamfer, c.forward});
  }
  return rows;
}

std::vector<GradCheckCase> gradcheck_suite(uint64_t seed) {
  std::vector<GradCheckCase> out;
  for (Variant v : {Variant::kFull, Variant::kNoSdf, Variant::kNoEncoding}) {
    ModelConfig c;
    c.variant = v;
    ModelSet m(c);
    m.initialize(mix_seed(seed, static_cast<uint64_t>(v)));
    std::vector<std::pair<std::string, const Mlp*>> nets{{"occupancy", &m.occ_net}};
    if (m.has_sdf()) nets.insert(nets.begin(), {"refinement", &m.sdf_net});
    for (const auto& [name, net] : nets) {
      const InputLayout layout = net == &m.sdf_net ? m.sdf_layout() : m.occ_layout();
      const std::size_t rows = 3;
      Rng rng(mix_seed(seed, out.size() + 100));
      std::vector<double> input(rows * layout.raw_dim());
      for (double& x : input) x = uniform(rng, -1.0, 1.0);
      out.push_back({to_string(v) + " " + name, 1e-4, gradient_check(*net, layout, input, rows, 1e-4, seed, 10)});
    }
    PointBatch s, o;
    random_check_batches(m, 2, 3, mix_seed(seed, 7), s, o);
    out.push_back({to_string(v) + " joint loss", 1e-5, gradient_check(m, s, o, {}, 1e-5, seed, 12)});
  }
  return out;
}

}  // namespace sesdf
