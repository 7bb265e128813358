// Acceptance runner: one PASS/FAIL line per criterion. Criteria 7-9 share
// one trained set of models and run together.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "sesdf/cli/pipeline.hpp"
#include "sesdf/fusion/fusion.hpp"
#include "sesdf/geometry/primitives.hpp"
#include "sesdf/sampling/sampling.hpp"
#include "sesdf/util/log.hpp"
#include "support/oracles.hpp"

using namespace sesdf;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int g_failures = 0;

void report(int id, const char* name, const Outcome& o) {
  if (!o.pass) ++g_failures;
  std::printf("criterion %2d %-28s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
}

void progress(const std::string& s) {
  std::printf("  .. %s\n", s.c_str());
  std::fflush(stdout);
}

// 1
Outcome geometry_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int mismatches = 0;
  std::size_t max_faces = 0;
  for (uint64_t m = 0; m < 5; ++m) {
    const TriangleMesh mesh = oracle::random_star_mesh(100 + m, 3);
    max_faces = std::max(max_faces, mesh.num_faces());
    const MeshQueries q(mesh);
    if (!q.watertight()) ++mismatches;
    const Aabb box = mesh.bounds().inflated(0.3);
    Rng rng(200 + m);
    for (int i = 0; i < 1000; ++i) {
      const Vec3 x(uniform(rng, box.lo.x(), box.hi.x()), uniform(rng, box.lo.y(), box.hi.y()),
                   uniform(rng, box.lo.z(), box.hi.z()));
      const ClosestPoint fast = q.closest_point(x), slow = oracle::brute_force_closest(mesh, x);
      worst = std::max(worst, std::abs(std::sqrt(fast.distance_squared) - std::sqrt(slow.distance_squared)));
      worst = std::max(worst, (fast.point - slow.point).norm());
      if (fast.face != slow.face) ++mismatches;

      const SdfQuery sd = q.signed_distance(x);
      const double brute_sd = (oracle::brute_force_inside(mesh, x) ? -1.0 : 1.0) * std::sqrt(slow.distance_squared);
      worst = std::max(worst, std::abs(sd.distance - brute_sd));

      Vec3 dir(normal(rng), normal(rng), normal(rng));
      dir.normalize();
      const auto hf = q.ray_nearest_hit(x, dir), hs = oracle::brute_force_ray(mesh, x, dir);
      if (hf.has_value() != hs.has_value()) {
        ++mismatches;
      } else if (hf) {
        worst = std::max(worst, std::abs(hf->t - hs->t));
        if (hf->face != hs->face) ++mismatches;
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst < 1e-9 && mismatches == 0 && secs < 10.0 && max_faces <= 2000;
  o.detail = fmt("max |diff| %.2e, %d mismatches, %zu faces max, %.1f s", worst, mismatches, max_faces, secs);
  return o;
}

// 2
Outcome gradient_oracle(uint64_t seed) {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const GradCheckCase& c : gradcheck_suite(seed)) {
    ok = ok && c.passed();
    if (c.report.max_rel_error >= worst) {
      worst = c.report.max_rel_error;
      worst_name = c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 30.0, fmt("max rel error %.2e (%s), %.1f s", worst, worst_name.c_str(), secs)};
}

// 3
Outcome distance_encoding() {
  const std::vector<double> zero = distance_encode(0.0, 5);
  const std::vector<double> expected{0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  bool ok = zero == expected && zero.size() == 13 && distance_code_size(5) == 13;
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double d = uniform(rng, -2.0, 2.0);
    const std::vector<double> a = distance_encode(d, 5), b = distance_encode(-d, 5);
    worst = std::max(worst, std::abs(a[0] + b[0]));
    for (int l = 0; l <= 5; ++l) {
      worst = std::max(worst, std::abs(a[1 + 2 * l] + b[1 + 2 * l]));  // odd
      worst = std::max(worst, std::abs(a[2 + 2 * l] - b[2 + 2 * l]));  // even
    }
  }
  ok = ok && worst < 1e-14;
  return {ok, fmt("D(0) %s, dim %zu, parity max %.1e", zero == expected ? "exact" : "WRONG", zero.size(), worst)};
}

// 4
Outcome fusion_invariants() {
  bool ok = true;
  std::vector<std::string> failed;
  auto check = [&](bool cond, const char* what) {
    if (!cond && std::find(failed.begin(), failed.end(), what) == failed.end()) failed.push_back(what);
    ok = ok && cond;
  };

  // Weights of every strategy on a posed body with three cameras.
  const SceneConfig sc;
  const Scene scene = generate_scene(4000, sc);
  const auto body = make_body_context(scene_body_model(sc), scene.params);
  const VertexIndex vertices(body->queries().mesh().vertices);
  const FusionContext ctx{body.get(), &vertices, &scene.rigs};
  const Aabb box = body->queries().mesh().bounds().inflated(0.1);
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const Vec3 x(uniform(rng, box.lo.x(), box.hi.x()), uniform(rng, box.lo.y(), box.hi.y()),
                 uniform(rng, box.lo.z(), box.hi.z()));
    for (FusionMode m : {FusionMode::kOcclusion, FusionMode::kAverage, FusionMode::kNormal, FusionMode::kVisibility}) {
      double sum = 0.0;
      for (double w : fusion_weights(m, ctx, x)) {
        check(w >= 0.0, "non-negative");
        sum += w;
      }
      check(std::abs(sum - 1.0) < 1e-9, "sum to 1");
    }
  }

  auto tuple = [&](int view) {
    PointTuple t;
    t.view = view;
    for (double& c : t.image) c = uniform(rng, -1, 1);
    t.space_channels = 22;
    for (int c = 0; c < 22; ++c) t.space[c] = uniform(rng, -1, 1);
    t.d = uniform(rng, -0.2, 0.2);
    t.n = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    t.z = uniform(rng, -1, 1);
    return t;
  };
  auto max_diff = [](const PointTuple& a, const PointTuple& b) {
    double m = std::max(std::abs(a.d - b.d), std::abs(a.z - b.z));
    m = std::max(m, (a.n - b.n).cwiseAbs().maxCoeff());
    for (int c = 0; c < kImageChannels; ++c) m = std::max(m, std::abs(a.image[c] - b.image[c]));
    for (int c = 0; c < a.space_channels; ++c) m = std::max(m, std::abs(a.space[c] - b.space[c]));
    return m;
  };

  // Worked example: depth gaps 0.1 and 0.3.
  const std::vector<PointTuple> pair{tuple(0), tuple(1)};
  const FusionResult ex = fuse_occlusion_aware(pair, {1.0 / 0.1, 1.0 / 0.3});
  check(std::abs(ex.weights[0] - 0.75) < 1e-15 && std::abs(ex.weights[1] - 0.25) < 1e-15, "worked example");

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PointTuple> t{tuple(0), tuple(1), tuple(2)};
    std::vector<double> w{uniform(rng, 0.1, 10), uniform(rng, 0.1, 10), uniform(rng, 0.1, 10)};
    const FusionResult r = fuse_occlusion_aware(t, w);
    check(std::abs(r.weights[0] + r.weights[1] + r.weights[2] - 1.0) < 1e-9, "sum to 1");
    for (int c = 0; c < kImageChannels; ++c) {
      const auto [lo, hi] = std::minmax({t[0].image[c], t[1].image[c], t[2].image[c]});
      check(r.tuple.image[c] >= lo - 1e-12 && r.tuple.image[c] <= hi + 1e-12, "convexity");
    }
    check(r.tuple.d >= std::min({t[0].d, t[1].d, t[2].d}) - 1e-12 &&
              r.tuple.d <= std::max({t[0].d, t[1].d, t[2].d}) + 1e-12,
          "convexity");
    // Permutation.
    const std::vector<PointTuple> tp{t[2], t[0], t[1]};
    check(max_diff(fuse_occlusion_aware(tp, {w[2], w[0], w[1]}).tuple, r.tuple) < 1e-12, "permutation");
    check(max_diff(fuse_average(tp).tuple, fuse_average(t).tuple) < 1e-12, "permutation");
    // Dominance: the gap of view 1 shrinks toward the floor.
    const double far = max_diff(fuse_occlusion_aware(t, {w[0], 1.0 / 1e-2, w[2]}).tuple, t[1]);
    const double near = max_diff(fuse_occlusion_aware(t, {w[0], 1.0 / 1e-8, w[2]}).tuple, t[1]);
    check(near < far && near < 1e-5, "dominance");
    // Single view.
    const std::vector<PointTuple> one{t[0]};
    check(max_diff(fuse_occlusion_aware(one, {w[0]}).tuple, t[0]) < 1e-15, "single-view identity");
    check(max_diff(fuse_average(one).tuple, t[0]) < 1e-15, "single-view identity");
  }
  // Context strategies with one camera are the identity too.
  const std::vector<ViewRig> one_rig{scene.rigs[0]};
  const FusionContext one_ctx{body.get(), &vertices, &one_rig};
  const std::vector<PointTuple> one{tuple(0)};
  for (FusionMode m : {FusionMode::kOcclusion, FusionMode::kAverage, FusionMode::kNormal, FusionMode::kVisibility}) {
    check(max_diff(fuse(m, one_ctx, box.center(), one).tuple, one[0]) < 1e-15, "single-view identity");
  }

  std::string detail = "weights, worked example, permutation, single view, dominance";
  if (!failed.empty()) {
    detail = "failed:";
    for (const std::string& f : failed) detail += " " + f;
  }
  return {ok, detail};
}

// 5
Outcome calibration_recovery(int scenes) {
  double worst_rot = 0.0, worst_trans = 0.0, worst_secs = 0.0, iou_sum = 0.0, worst_iou = 1.0;
  SceneConfig sc;
  sc.cloth_amp = 0.0;
  for (int i = 0; i < scenes; ++i) {
    const Scene scene = generate_scene(3000 + i, sc);
    FitOptions fo;
    fo.jitter_init = true;
    fo.seed = 50 + i;
    const auto t0 = Clock::now();
    const SceneFit fit = fit_scene(scene, fo);
    const double secs = seconds_since(t0);
    const CalibrationError e = calibration_error(scene, fit);
    progress(fmt("scene %d: rotation %.3f deg, translation %.4f%%, IoU %.4f, %.0f s", i, e.rotation_degrees,
                 100 * e.translation_fraction, e.mean_iou, secs));
    worst_rot = std::max(worst_rot, e.rotation_degrees);
    worst_trans = std::max(worst_trans, e.translation_fraction);
    worst_secs = std::max(worst_secs, secs);
    worst_iou = std::min(worst_iou, e.mean_iou);
    iou_sum += e.mean_iou;
  }
  const double mean_iou = iou_sum / scenes;
  Outcome o;
  o.pass = worst_rot < 0.5 && worst_trans < 0.005 && mean_iou > 0.98 && worst_secs < 120.0;
  o.detail = fmt("worst rotation %.3f deg, worst translation %.3f%% diag, mean IoU %.4f (min %.4f), slowest %.0f s",
                 worst_rot, 100 * worst_trans, mean_iou, worst_iou, worst_secs);
  return o;
}

// 6
Outcome marching_cubes_sphere() {
  const AnalyticField sphere([](const Vec3& x) { return x.norm() < 0.5 ? 1.0 : 0.0; });
  const Aabb cube(Vec3(-1, -1, -1), Vec3(1, 1, 1));
  const ScalarGrid grid = evaluate_grid(sphere, cube, 64, ExtractFrom::kOccupancy);
  const TriangleMesh mesh = extract_surface(grid, 0.5);
  double worst = 0.0;
  for (const Vec3& v : mesh.vertices) worst = std::max(worst, std::abs(v.norm() - 0.5));
  // Chamfer against the exact sphere: forward in closed form, backward from
  // uniform points on the sphere to the mesh.
  Rng rng(6);
  double forward = 0.0;
  const std::vector<SurfaceSample> samples = sample_surface(mesh, kDefaultMetricSamples, rng);
  for (const SurfaceSample& s : samples) forward += std::abs(s.x.norm() - 0.5);
  forward /= static_cast<double>(samples.size());
  const MeshQueries q(mesh);
  double backward = 0.0;
  for (std::size_t i = 0; i < kDefaultMetricSamples; ++i) {
    const Vec3 p = 0.5 * Vec3(normal(rng), normal(rng), normal(rng)).normalized();
    backward += std::sqrt(q.closest_point(p).distance_squared);
  }
  backward /= static_cast<double>(kDefaultMetricSamples);
  const double cd = 0.5 * (forward + backward), cell = grid.spacing().x();
  Outcome o;
  o.pass = !mesh.empty() && worst <= 0.05 && cd < cell && is_closed(mesh);
  o.detail = fmt("max |r - 0.5| %.4f, chamfer %.5f vs cell %.5f, closed %s", worst, cd, cell,
                 is_closed(mesh) ? "yes" : "no");
  return o;
}

// 10
Outcome metric_sanity() {
  double self = 0.0;
  for (const TriangleMesh& m : {oracle::random_star_mesh(10, 3), make_cube(), make_icosphere(0.7, 4)}) {
    self = std::max({self, chamfer(m, m), p2s(m, m)});
  }
  const TriangleMesh a = make_icosphere(1.0, 5), b = make_icosphere(1.1, 5);
  const double c = chamfer(a, b), pf = p2s(a, b), pb = p2s(b, a);
  Outcome o;
  o.pass = self < 1e-9 && std::abs(c - 0.1) <= 0.01 && std::abs(pf - 0.1) <= 0.01 && std::abs(pb - 0.1) <= 0.01;
  o.detail = fmt("self %.1e, spheres chamfer %.5f p2s %.5f / %.5f", self, c, pf, pb);
  return o;
}

// 7, 8, 9
struct E2eConfig {
  fs::path work = "acceptance_work";
  int train_scenes = 24;
  int test_scenes = 8;
  int epochs = 12;
  int resolution = 64;
  bool reuse = false;
  uint64_t seed = 1;
};

constexpr uint64_t kTrainSeeds = 0, kTestSeeds = 1000, kBlockerSeeds = 2000;

std::vector<fs::path> ensure_dataset(const fs::path& root, int count, uint64_t first, bool blocker, bool reuse) {
  if (reuse && fs::exists(root) && static_cast<int>(list_scenes(root).size()) == count) return list_scenes(root);
  fs::remove_all(root);
  DatasetConfig d;
  d.scenes = count;
  d.first_seed = first;
  d.scene.blocker = blocker;
  return generate_dataset(root, d);
}

ModelSet ensure_model(Variant v, const std::vector<SceneSamples>& data, const E2eConfig& cfg) {
  const fs::path ckpt = cfg.work / ("model_" + to_string(v) + ".sesw");
  if (cfg.reuse && fs::exists(ckpt)) return load_checkpoint(ckpt);
  ModelConfig mc;
  mc.variant = v;
  ModelSet model(mc);
  model.initialize(cfg.seed);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.seed = cfg.seed;
  tc.dump_dir = cfg.work;
  const auto t0 = Clock::now();
  const auto curve = train(model, data, tc, [&](const EpochLoss& e) {
    progress(fmt("%s epoch %d: L_s %.4f L_o %.4f L_r %.4f (%.0f s)", to_string(v).c_str(), e.epoch,
                 e.parts.surface, e.parts.occupancy, e.parts.eikonal, seconds_since(t0)));
  });
  save_checkpoint(model, ckpt);
  write_loss_csv(curve, cfg.work / ("loss_" + to_string(v) + ".csv"));
  return model;
}

void end_to_end(const E2eConfig& cfg, const std::set<int>& wanted) {
  const auto t0 = Clock::now();
  fs::create_directories(cfg.work);
  ensure_dataset(cfg.work / "train", cfg.train_scenes, kTrainSeeds, false, cfg.reuse);
  const auto test_dirs = ensure_dataset(cfg.work / "test", cfg.test_scenes, kTestSeeds, false, cfg.reuse);
  std::vector<fs::path> blocker_dirs;
  if (wanted.count(9)) blocker_dirs = ensure_dataset(cfg.work / "test_blocker", cfg.test_scenes, kBlockerSeeds, true, cfg.reuse);
  progress(fmt("data ready (%.0f s)", seconds_since(t0)));
  const std::vector<SceneSamples> data = load_training_data(cfg.work / "train", SamplingConfig{}, cfg.seed);

  std::vector<Variant> variants{Variant::kFull};
  if (wanted.count(7)) {
    variants.push_back(Variant::kNoSdf);
    variants.push_back(Variant::kNoEncoding);
  }
  std::map<Variant, ModelSet> models;
  for (Variant v : variants) models.emplace(v, ensure_model(v, data, cfg));

  SceneReconOptions ro;
  ro.recon.resolution = cfg.resolution;
  std::ofstream csv(cfg.work / "e2e_results.csv");
  csv << "scene,variant,views,chamfer,p2s\n";
  csv.precision(9);
  std::map<std::pair<Variant, int>, double> sums;
  for (const fs::path& dir : test_dirs) {
    const Scene scene = load_scene(dir);
    const SceneState state = ground_truth_state(scene);
    auto run = [&](Variant v, int views) {
      ro.views = views;
      const ReconResult r = reconstruct_scene(models.at(v), scene, state, ro);
      const ChamferResult c = chamfer_detail(r.mesh, scene.gt, kDefaultMetricSamples, cfg.seed);
      csv << dir.filename().string() << ',' << to_string(v) << ',' << views << ',' << c.chamfer << ',' << c.forward
          << '\n';
      sums[{v, views}] += c.chamfer;
      progress(fmt("%s %s %d view(s): chamfer %.5f", dir.filename().string().c_str(), to_string(v).c_str(), views,
                   c.chamfer));
    };
    for (Variant v : variants) run(v, 3);
    if (wanted.count(8)) run(Variant::kFull, 1);
  }
  const double n = static_cast<double>(test_dirs.size());
  auto mean = [&](Variant v, int views) { return sums[{v, views}] / n; };

  std::map<FusionMode, double> fusion_sum;
  if (wanted.count(9)) {
    std::ofstream fcsv(cfg.work / "fusion_ablation.csv");
    fcsv << "scene,fusion,chamfer,p2s\n";
    fcsv.precision(9);
    ro.views = 0;
    for (const fs::path& dir : blocker_dirs) {
      const Scene scene = load_scene(dir);
      for (const FusionRow& r : ablate_fusion(models.at(Variant::kFull), scene, ground_truth_state(scene), ro,
                                              kDefaultMetricSamples, cfg.seed)) {
        fcsv << dir.filename().string() << ',' << to_string(r.fusion) << ',' << r.chamfer << ',' << r.p2s << '\n';
        fusion_sum[r.fusion] += r.chamfer;
      }
      progress(fmt("fusion ablation %s done", dir.filename().string().c_str()));
    }
    for (const auto& [mode, sum] : fusion_sum) fcsv << "mean," << to_string(mode) << ',' << sum / n << ",\n";
  }
  const double total = seconds_since(t0);

  if (wanted.count(7)) {
    const double full = mean(Variant::kFull, 3), nosdf = mean(Variant::kNoSdf, 3), noenc = mean(Variant::kNoEncoding, 3);
    Outcome o;
    o.pass = full <= 0.95 * nosdf && full <= 0.95 * noenc && total < 7200.0;
    o.detail = fmt("chamfer full %.5f, no-sdf %.5f (%+.1f%%), no-encoding %.5f (%+.1f%%), run %.0f min", full, nosdf,
                   100 * (nosdf - full) / nosdf, noenc, 100 * (noenc - full) / noenc, total / 60);
    report(7, "end-to-end ablation", o);
  }
  if (wanted.count(8)) {
    const double three = mean(Variant::kFull, 3), one = mean(Variant::kFull, 1);
    report(8, "multi-view vs single-view", {three < one, fmt("chamfer 3 views %.5f, 1 view %.5f", three, one)});
  }
  if (wanted.count(9)) {
    const double occ = fusion_sum[FusionMode::kOcclusion] / n;
    bool ok = true;
    std::string detail = fmt("occlusion %.5f", occ);
    for (FusionMode m : {FusionMode::kAverage, FusionMode::kNormal, FusionMode::kVisibility}) {
      ok = ok && occ <= fusion_sum[m] / n;
      detail += fmt(", %s %.5f", to_string(m).c_str(), fusion_sum[m] / n);
    }
    detail += ", csv " + (cfg.work / "fusion_ablation.csv").string();
    report(9, "fusion ablation (blocker)", {ok, detail});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria runner"};
  std::vector<int> criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  E2eConfig e2e;
  int calib_scenes = 8;
  app.add_option("--criteria", criteria, "comma-separated criterion numbers")->delimiter(',');
  app.add_option("--work", e2e.work, "working directory for the end-to-end run");
  app.add_option("--res", e2e.resolution, "reconstruction lattice size for criteria 7-9");
  app.add_option("--train-scenes", e2e.train_scenes, "training scenes");
  app.add_option("--test-scenes", e2e.test_scenes, "held-out scenes");
  app.add_option("--epochs", e2e.epochs, "training epochs");
  app.add_option("--calib-scenes", calib_scenes, "scenes for criterion 5");
  app.add_flag("--reuse", e2e.reuse, "reuse datasets and checkpoints found in --work");
  CLI11_PARSE(app, argc, argv);
  log::set_quiet(true);

  const std::set<int> wanted(criteria.begin(), criteria.end());
  auto run = [&](int id, const char* name, const std::function<Outcome()>& f) {
    if (!wanted.count(id)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    report(id, name, o);
  };
  run(1, "geometry oracle", geometry_oracle);
  run(2, "gradient oracle", [] { return gradient_oracle(1); });
  run(3, "distance encoding", distance_encoding);
  run(4, "fusion invariants", fusion_invariants);
  run(5, "calibration recovery", [&] { return calibration_recovery(calib_scenes); });
  run(6, "marching cubes sphere", marching_cubes_sphere);
  run(10, "metric sanity", metric_sanity);
  if (wanted.count(7) || wanted.count(8) || wanted.count(9)) {
    try {
      end_to_end(e2e, wanted);
    } catch (const std::exception& e) {
      for (int id : {7, 8, 9}) {
        if (wanted.count(id)) {
          report(id, "end-to-end", {false, std::string("error: ") + e.what()});
        }
      }
    }
  }
  return g_failures == 0 ? 0 : 1;
}
