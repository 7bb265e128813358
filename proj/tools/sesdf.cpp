#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sesdf/cli/pipeline.hpp"
#include "sesdf/geometry/obj_io.hpp"
#include "sesdf/util/log.hpp"
#include "sesdf/util/parallel.hpp"

using namespace sesdf;

namespace {

struct Global {
  int threads = 0;
  uint64_t seed = 1;
  bool quiet = false;
};

std::string config_path;

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& description) {
  CLI::App* sub = app.add_subcommand(name, description);
  // Consumed by expand_config before parsing; declared for --help.
  sub->add_option("--config", config_path, "flat key=value file of long flag names; flags given here win");
  sub->fallthrough();
  return sub;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Rewrites `--config FILE` into `--key=value` arguments placed right after
// the subcommand name, so anything on the command line comes later and wins.
std::vector<std::string> expand_config(int argc, char** argv, const CLI::App& app) {
  std::vector<std::string> args(argv + 1, argv + argc), out, injected;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (file.empty()) return out;
  std::ifstream is(file);
  if (!is) throw Error("cannot read config " + file);
  std::string line;
  for (int n = 1; std::getline(is, line); ++n) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(file + ":" + std::to_string(n) + ": expected key=value");
    injected.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  auto sub = std::find_if(out.begin(), out.end(), [&](const std::string& a) {
    for (const CLI::App* s : app.get_subcommands({})) {
      if (s->get_name() == a) return true;
    }
    return false;
  });
  if (sub == out.end()) throw Error("--config needs a subcommand");
  out.insert(sub + 1, injected.begin(), injected.end());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

std::string angle_path(const std::string& pattern, double angle) {
  const std::size_t at = pattern.find("{angle}");
  if (at == std::string::npos) throw Error("with --angles, paths must contain {angle}: " + pattern);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", angle);
  return pattern.substr(0, at) + buf + pattern.substr(at + 7);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sesdf: multi-view clothed body reconstruction toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Global g;
  app.add_option("--threads", g.threads, "worker threads (0 = hardware); 1 is bit-reproducible")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "seed for every random choice");
  app.add_flag("--quiet", g.quiet, "suppress warnings");

  // synth-gen
  DatasetConfig data;
  std::filesystem::path gen_out;
  CLI::App* gen = subcommand(app, "synth-gen", "generate synthetic scenes");
  gen->add_option("--out", gen_out, "dataset directory")->required();
  gen->add_option("--scenes", data.scenes, "number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--views", data.scene.views, "views per scene")->check(CLI::PositiveNumber);
  gen->add_option("--cloth-amp", data.scene.cloth_amp, "cloth displacement, fraction of the bbox diagonal")
      ->check(CLI::NonNegativeNumber);
  gen->add_option("--image", data.scene.image, "image size in pixels")->check(CLI::PositiveNumber);
  gen->add_option("--shape-sigma", data.scene.shape_sigma, "std of the shape coefficients");
  gen->add_option("--pose-sigma", data.scene.pose_sigma, "std of joint rotations in radians");
  gen->add_option("--jitter-deg", data.scene.jitter_degrees, "rig rotation jitter in degrees");
  gen->add_option("--jitter-trans", data.scene.jitter_translation, "rig translation jitter, fraction of the diagonal");
  gen->add_flag("--blocker", data.scene.blocker, "occlude half of view 0 with a box");

  // fit-views
  std::filesystem::path fit_scene_dir;
  FitOptions fit;
  CLI::App* fitc = subcommand(app, "fit-views", "self-calibrate rigs and body; writes fit.json");
  fitc->add_option("--scene", fit_scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  fitc->add_flag("--jitter-init", fit.jitter_init, "start from perturbed true rigs instead of keypoints alone");
  fitc->add_option("--jitter-deg", fit.jitter_degrees, "initial rotation error in degrees");
  fitc->add_option("--jitter-trans", fit.jitter_translation, "initial translation error, fraction of the diagonal");

  // train
  std::filesystem::path train_data, train_out, loss_csv;
  std::string variant = "full";
  TrainConfig tc;
  SamplingConfig sampling;
  bool fixed_views = false;
  CLI::App* trainc = subcommand(app, "train", "train the refinement and occupancy networks");
  trainc->add_option("--data", train_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  trainc->add_option("--out", train_out, "checkpoint path")->required();
  trainc->add_option("--loss-csv", loss_csv, "loss curve (default: <out>.loss.csv)");
  trainc->add_option("--variant", variant, "full, no-sdf or no-encoding")
      ->check(CLI::IsMember({"full", "no-sdf", "no-encoding"}));
  trainc->add_option("--epochs", tc.epochs, "epochs")->check(CLI::PositiveNumber);
  trainc->add_option("--lr", tc.learning_rate, "initial learning rate");
  trainc->add_option("--decay", tc.decay, "rate factor per step");
  trainc->add_option("--decay-every", tc.decay_every, "epochs per step")->check(CLI::PositiveNumber);
  trainc->add_option("--batch-size", tc.batch_size, "points per batch and loss")->check(CLI::PositiveNumber);
  trainc->add_option("--lambda-surface", tc.loss.surface, "surface loss weight");
  trainc->add_option("--lambda-occupancy", tc.loss.occupancy, "occupancy loss weight");
  trainc->add_option("--lambda-eikonal", tc.loss.eikonal, "eikonal weight");
  trainc->add_option("--surface-samples", sampling.surface_count, "surface points per scene");
  trainc->add_option("--occupancy-samples", sampling.occupancy_count, "occupancy points per scene");
  trainc->add_option("--sigma", sampling.sigma_fraction, "occupancy sample spread, fraction of the diagonal");
  trainc->add_flag("--fixed-views", fixed_views, "every batch sees all views");

  // reconstruct and ablate-fusion share scene options
  std::filesystem::path rec_scene, rec_ckpt, rec_out, rec_report;
  SceneReconOptions ro;
  std::string fusion = "occlusion", extract = "occupancy", body = "fit";
  auto scene_options = [&](CLI::App* c) {
    c->add_option("--scene", rec_scene, "scene directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--ckpt", rec_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
    c->add_option("--views", ro.views, "use the first N views (0 = all)")->check(CLI::NonNegativeNumber);
    c->add_option("--res", ro.recon.resolution, "lattice points per axis")->check(CLI::Range(2, 512));
    c->add_option("--body", body, "body and rigs: fit (fit.json) or gt")->check(CLI::IsMember({"fit", "gt"}));
  };
  CLI::App* recc = subcommand(app, "reconstruct", "reconstruct a scene to OBJ");
  scene_options(recc);
  recc->add_option("--fusion", fusion, "occlusion, average, normal or visibility")
      ->check(CLI::IsMember({"occlusion", "average", "normal", "visibility"}));
  recc->add_option("--extract-from", extract, "occupancy or sdf")->check(CLI::IsMember({"occupancy", "sdf"}));
  recc->add_option("--out", rec_out, "output mesh")->required();
  recc->add_option("--report", rec_report, "report JSON (default: <out>.json)");

  std::filesystem::path ablate_out;
  std::size_t samples = kDefaultMetricSamples;
  CLI::App* abl = subcommand(app, "ablate-fusion", "reconstruct with every fusion strategy and score each");
  scene_options(abl);
  abl->add_option("--out", ablate_out, "CSV (default: <scene>/fusion_ablation.csv)");
  abl->add_option("--samples", samples, "metric samples per direction")->check(CLI::PositiveNumber);

  // evaluate
  std::string pred, gt;
  std::vector<double> angles;
  std::filesystem::path eval_out;
  CLI::App* evalc = subcommand(app, "evaluate", "Chamfer and P2S of a reconstruction");
  evalc->add_option("--pred", pred, "predicted mesh (with --angles: pattern containing {angle})")->required();
  evalc->add_option("--gt", gt, "ground-truth mesh (pattern with --angles)")->required();
  evalc->add_option("--angles", angles, "comma-separated input angles")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  evalc->add_option("--samples", samples, "samples per direction")->check(CLI::PositiveNumber);
  evalc->add_option("--out", eval_out, "CSV path (default: stdout)");

  CLI::App* gc = subcommand(app, "gradcheck", "analytic vs finite-difference gradients; nonzero exit on failure");

  try {
    std::vector<std::string> args = expand_config(argc, argv, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  set_max_threads(g.threads);
  log::set_quiet(g.quiet);

  try {
    if (*gen) {
      data.first_seed = g.seed;
      const auto dirs = generate_dataset(gen_out, data);
      std::printf("wrote %zu scenes to %s\n", dirs.size(), gen_out.string().c_str());
    } else if (*fitc) {
      fit.seed = g.seed;
      const Scene scene = load_scene(fit_scene_dir);
      const SceneFit f = fit_scene(scene, fit);
      save_fit(f, fit_scene_dir / "fit.json");
      const CalibrationError e = calibration_error(scene, f);
      nlohmann::json j = f.report.to_json();
      j["rotation_error_degrees"] = e.rotation_degrees;
      j["translation_error_fraction"] = e.translation_fraction;
      std::printf("%s\n", j.dump(2).c_str());
    } else if (*trainc) {
      tc.seed = g.seed;
      tc.random_view_subsets = !fixed_views;
      tc.dump_dir = train_out.parent_path().empty() ? "." : train_out.parent_path();
      const std::vector<SceneSamples> samples_data = load_training_data(train_data, sampling, g.seed);
      ModelConfig mc;
      mc.variant = variant_from_string(variant);
      ModelSet model(mc);
      model.initialize(g.seed);
      const auto curve = train(model, samples_data, tc, [](const EpochLoss& e) {
        std::printf("epoch %d  L_s %.5f  L_o %.5f  L_r %.5f  total %.5f\n", e.epoch, e.parts.surface,
                    e.parts.occupancy, e.parts.eikonal, e.total);
        std::fflush(stdout);
      });
      save_checkpoint(model, train_out);
      write_loss_csv(curve, loss_csv.empty() ? std::filesystem::path(train_out.string() + ".loss.csv") : loss_csv);
    } else if (*recc || *abl) {
      const Scene scene = load_scene(rec_scene);
      const SceneState state = scene_state(scene, rec_scene, state_source_from_string(body));
      const ModelSet model = load_checkpoint(rec_ckpt);
      if (*recc) {
        ro.fusion = fusion_mode_from_string(fusion);
        ro.recon.extract = extract_from_string(extract);
        const ReconResult r = reconstruct_scene(model, scene, state, ro);
        write_obj(r.mesh, rec_out);
        write_text(rec_report.empty() ? std::filesystem::path(rec_out.string() + ".json") : rec_report,
                   r.report.to_json().dump(2) + "\n");
        std::printf("%zu triangles, eval %.1f s\n", r.report.triangles, r.report.eval_seconds);
      } else {
        const auto rows = ablate_fusion(model, scene, state, ro, samples, g.seed);
        const std::filesystem::path out = ablate_out.empty() ? rec_scene / "fusion_ablation.csv" : ablate_out;
        write_fusion_csv(rows, out);
        for (const FusionRow& r : rows) std::printf("%-10s chamfer %.6f p2s %.6f\n", to_string(r.fusion).c_str(), r.chamfer, r.p2s);
      }
    } else if (*evalc) {
      const bool per_angle = !angles.empty();
      if (!per_angle) angles = {0.0};
      const ProtocolTable t = eval_protocol(
          angles,
          [&](double a, TriangleMesh& p, TriangleMesh& q) {
            p = read_obj(per_angle ? angle_path(pred, a) : pred);
            q = read_obj(per_angle ? angle_path(gt, a) : gt);
          },
          samples, g.seed);
      if (eval_out.empty()) {
        t.write_csv(std::cout);
      } else {
        t.write_csv(eval_out);
      }
    } else if (*gc) {
      bool ok = true;
      for (const GradCheckCase& c : gradcheck_suite(g.seed)) {
        std::printf("%-8s %-24s eps %.0e  max rel %.3e  (%zu checked, %zu kinks)  worst %s[%zu]\n",
                    c.passed() ? "ok" : "FAIL", c.name.c_str(), c.eps, c.report.max_rel_error, c.report.checked,
                    c.report.skipped_kinks, c.report.worst_tensor.c_str(), c.report.worst_index);
        ok = ok && c.passed();
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
