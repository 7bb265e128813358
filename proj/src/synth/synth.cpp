#include "sesdf/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include "sesdf/body/model_io.hpp"
#include "sesdf/body/procedural.hpp"
#include "sesdf/calib/raster.hpp"
#include "sesdf/calib/refine.hpp"
#include "sesdf/geometry/mesh_queries.hpp"
#include "sesdf/geometry/obj_io.hpp"
#include "sesdf/geometry/primitives.hpp"
#include "sesdf/geometry/rotation.hpp"
#include "sesdf/util/parallel.hpp"

namespace sesdf {

ValueNoise::ValueNoise(uint64_t seed, double base_frequency, int octaves)
    : seed_(seed), base_(base_frequency), octaves_(octaves) {
  if (octaves < 1 || !(base_frequency > 0.0)) throw Error("value noise needs a positive frequency and >= 1 octave");
}

double ValueNoise::lattice(int64_t i, int64_t j, int64_t k, int o) const {
  uint64_t h = mix_seed(seed_, static_cast<uint64_t>(o));
  h = mix_seed(h, static_cast<uint64_t>(i));
  h = mix_seed(h, static_cast<uint64_t>(j));
  h = mix_seed(h, static_cast<uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

namespace {
double fade(double t) { return t * t * t * (t * (6.0 * t - 15.0) + 10.0); }
}  // namespace

double ValueNoise::octave(const Vec3& x, int o) const {
  const Vec3 p = x * (base_ * std::ldexp(1.0, o));
  const Vec3 f = p.array().floor();
  const int64_t i = static_cast<int64_t>(f.x()), j = static_cast<int64_t>(f.y()), k = static_cast<int64_t>(f.z());
  const Vec3 t = p - f;
  const double u = fade(t.x()), v = fade(t.y()), w = fade(t.z());
  double out = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double weight = (dx ? u : 1.0 - u) * (dy ? v : 1.0 - v) * (dz ? w : 1.0 - w);
    out += weight * lattice(i + dx, j + dy, k + dz, o);
  }
  return out;
}

double ValueNoise::operator()(const Vec3& x) const {
  double sum = 0.0, norm = 0.0;
  for (int o = 0; o < octaves_; ++o) {
    const double a = std::ldexp(1.0, -o);
    sum += a * octave(x, o);
    norm += a;
  }
  return sum / norm;
}

std::vector<double> vertex_clearance(const TriangleMesh& mesh, const std::vector<Vec3>& normals) {
  const MeshQueries q(mesh);
  std::vector<double> out(mesh.num_vertices(), std::numeric_limits<double>::infinity());
  const double tmin = 1e-6 * q.bbox_diagonal();
  parallel_for(mesh.num_vertices(), [&](std::size_t v) {
    if (normals[v].squaredNorm() == 0.0) return;
    for (double s : {-1.0, 1.0}) {
      if (const auto hit = q.ray_nearest_hit(mesh.vertices[v], s * normals[v], tmin)) {
        out[v] = std::min(out[v], hit->t);
      }
    }
  });
  return out;
}

TriangleMesh generate_clothed_mesh(const BodyModel& model, const BodyParams& params, double cloth_amp,
                                   uint64_t noise_seed) {
  if (!(cloth_amp >= 0.0)) throw Error("cloth_amp must be >= 0");
  TriangleMesh posed = lbs_forward(model, params);
  if (cloth_amp == 0.0) return posed;
  const double amp = cloth_amp * posed.bounds().diagonal();
  const std::vector<Vec3> normals = compute_vertex_normals(posed);
  const std::vector<double> clearance = vertex_clearance(posed, normals);

  std::vector<double> sorted;
  for (double c : clearance) {
    if (std::isfinite(c)) sorted.push_back(c);
  }
  if (sorted.empty()) throw Error("body mesh has no measurable thickness");
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (amp > 0.5 * median) {
    throw Error("cloth amplitude " + std::to_string(cloth_amp) + " exceeds half the median limb thickness");
  }

  const ValueNoise noise(noise_seed);
  std::vector<double> offset(posed.num_vertices());
  for (std::size_t v = 0; v < posed.num_vertices(); ++v) {
    const double cap = 0.45 * clearance[v];
    offset[v] = std::clamp(amp * noise(model.template_mesh.vertices[v]), -cap, cap);
  }

  // Marching-cubes slivers fold under almost any uneven offset, and a folded
  // face breaks pseudonormal inside tests. Halve the offset around faces that
  // turn too far; with all three offsets at zero a face is back to the body's.
  std::vector<Vec3> face_normal(posed.num_faces());
  for (std::size_t f = 0; f < posed.num_faces(); ++f) face_normal[f] = posed.face_normal(f);
  TriangleMesh clothed = posed;
  for (int pass = 0;; ++pass) {
    for (std::size_t v = 0; v < posed.num_vertices(); ++v) {
      clothed.vertices[v] = posed.vertices[v] + offset[v] * normals[v];
    }
    bool folded = false;
    for (std::size_t f = 0; f < posed.num_faces(); ++f) {
      if (face_normal[f].isZero() || clothed.face_normal(f).dot(face_normal[f]) >= 0.5) continue;
      folded = true;
      for (int v : posed.faces[f]) offset[v] = pass >= 40 ? 0.0 : 0.5 * offset[v];
    }
    if (!folded) break;
  }
  return clothed;
}

nlohmann::json SceneConfig::to_json() const {
  return {{"views", views},
          {"image", image},
          {"cloth_amp", cloth_amp},
          {"shape_sigma", shape_sigma},
          {"pose_sigma", pose_sigma},
          {"jitter_degrees", jitter_degrees},
          {"jitter_translation", jitter_translation},
          {"blocker", blocker},
          {"template_seed", template_seed},
          {"template_resolution", template_resolution}};
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) {
  SceneConfig c;
  c.views = j.at("views").get<int>();
  c.image = j.at("image").get<int>();
  c.cloth_amp = j.at("cloth_amp").get<double>();
  c.shape_sigma = j.at("shape_sigma").get<double>();
  c.pose_sigma = j.at("pose_sigma").get<double>();
  c.jitter_degrees = j.at("jitter_degrees").get<double>();
  c.jitter_translation = j.at("jitter_translation").get<double>();
  c.blocker = j.at("blocker").get<bool>();
  c.template_seed = j.at("template_seed").get<int>();
  c.template_resolution = j.at("template_resolution").get<int>();
  return c;
}

const BodyModel& scene_body_model(const SceneConfig& config) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, BodyModel> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_pair(config.template_seed, config.template_resolution);
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, make_procedural_template(config.template_seed, config.template_resolution)).first;
  }
  return it->second;
}

std::vector<ViewRig> nominal_rigs(const TriangleMesh& body, int views, int image) {
  if (views < 1) throw Error("need at least one view");
  const Aabb b = body.bounds();
  std::vector<ViewRig> rigs;
  for (int k = 0; k < views; ++k) {
    ViewRig r;
    r.width = r.height = image;
    r.rotation = rotation_y(k * 2.0 * std::numbers::pi / views);
    r.ortho_scale = 0.85 * image / b.diagonal();
    r.translation = -(r.rotation * b.center());
    rigs.push_back(r);
  }
  return rigs;
}

ViewSet generate_views(const BodyModel& model, const BodyParams& params, const TriangleMesh& gt,
                       const SceneConfig& config, uint64_t jitter_seed) {
  const TriangleMesh body = lbs_forward(model, params);
  ViewSet out;
  out.rigs = nominal_rigs(body, config.views, config.image);
  Rng rng(jitter_seed);
  const double diag = body.bounds().diagonal();
  if (config.jitter_degrees > 0.0 || config.jitter_translation > 0.0) {
    for (ViewRig& r : out.rigs) r = perturb_rig(r, config.jitter_degrees, config.jitter_translation, diag, rng);
  }
  for (const ViewRig& r : out.rigs) {
    out.observations.push_back({project_joints(model, params, r), rasterize_silhouette(gt, r)});
  }
  return out;
}

TriangleMesh make_blocker(const TriangleMesh& gt, const ViewRig& rig) {
  const Mask mask = rasterize_silhouette(gt, rig);
  std::vector<int> columns;
  int vmin = rig.height, vmax = -1;
  for (int j = 0; j < mask.height; ++j) {
    for (int i = 0; i < mask.width; ++i) {
      if (!mask.at(i, j)) continue;
      columns.push_back(i);
      vmin = std::min(vmin, j);
      vmax = std::max(vmax, j);
    }
  }
  if (columns.empty()) throw Error("blocker: subject not visible in the view");
  std::nth_element(columns.begin(), columns.begin() + columns.size() / 2, columns.end());
  const double umid = columns[columns.size() / 2];
  const double margin = 4.0;
  double zmin = std::numeric_limits<double>::infinity();
  for (const Vec3& v : gt.vertices) zmin = std::min(zmin, rig.to_camera(v).z());
  const double diag = gt.bounds().diagonal();
  // Camera-frame box: left of the median column, in front of the subject.
  const Vec2 c = rig.center();
  const Vec3 lo((-margin - c.x()) / rig.ortho_scale, (vmin - margin - c.y()) / rig.ortho_scale,
                zmin - 0.2 * diag);
  const Vec3 hi((umid - c.x()) / rig.ortho_scale, (vmax + 1 + margin - c.y()) / rig.ortho_scale, zmin - 0.1 * diag);
  const Mat3 rt = rig.rotation.transpose();
  return transformed(make_box(lo, hi), rt, -(rt * rig.translation));
}

Scene generate_scene(uint64_t seed, const SceneConfig& config) {
  if (config.views < 1 || config.image < 8) throw Error("scene needs >= 1 view and images of >= 8 pixels");
  const BodyModel& model = scene_body_model(config);
  Scene s;
  s.seed = seed;
  s.config = config;
  Rng rng(mix_seed(seed, 0));
  s.params = BodyParams::zeros(model);
  for (int k = 0; k < model.num_shape(); ++k) s.params.beta[k] = normal(rng, 0.0, config.shape_sigma);
  for (int j = 1; j < model.num_joints(); ++j) {
    s.params.theta[j] = config.pose_sigma * Vec3(normal(rng), normal(rng), normal(rng));
  }
  s.params.theta[model.root()] = Vec3(0.0, uniform(rng, -std::numbers::pi, std::numbers::pi), 0.0);
  s.gt = generate_clothed_mesh(model, s.params, config.cloth_amp, mix_seed(seed, 1));
  ViewSet views = generate_views(model, s.params, s.gt, config, mix_seed(seed, 2));
  s.rigs = std::move(views.rigs);
  s.observations = std::move(views.observations);
  const MeshQueries gt(s.gt);
  for (std::size_t k = 0; k < s.rigs.size(); ++k) {
    if (k == 0 && config.blocker) {
      const MeshQueries blocked(concatenate(s.gt, make_blocker(s.gt, s.rigs[0])));
      s.features.push_back(render_feature_image(blocked, s.rigs[0]));
    } else {
      s.features.push_back(render_feature_image(gt, s.rigs[k]));
    }
  }
  return s;
}

namespace {

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace

void export_scene(const Scene& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json({{"version", s.version}, {"seed", s.seed}, {"config", s.config.to_json()}}, dir / "params.json");
  write_json(params_to_json(s.params), dir / "body.json");
  write_obj(s.gt, dir / "gt.obj");
  const BodyModel& model = scene_body_model(s.config);
  for (std::size_t k = 0; k < s.rigs.size(); ++k) {
    const auto vdir = dir / ("view_" + std::to_string(k));
    std::filesystem::create_directories(vdir);
    save_observation(s.observations[k], model.joint_names, vdir);
    write_feature_image(s.features[k], vdir / "features.sesf");
    write_json(rig_to_json(s.rigs[k]), vdir / "rig.json");
  }
}

Scene load_scene(const std::filesystem::path& dir) {
  const nlohmann::json meta = read_json(dir / "params.json");
  Scene s;
  try {
    s.version = meta.at("version").get<int>();
    if (s.version != kSceneVersion) {
      throw Error("scene version " + std::to_string(s.version) + " is not supported (expected " +
                  std::to_string(kSceneVersion) + ")");
    }
    s.seed = meta.at("seed").get<uint64_t>();
    s.config = SceneConfig::from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error((dir / "params.json").string() + ": " + e.what());
  }
  const BodyModel& model = scene_body_model(s.config);
  s.params = params_from_json(read_json(dir / "body.json"));
  s.params.check(model);
  if (!std::filesystem::exists(dir / "gt.obj")) throw Error("scene lacks gt.obj: " + dir.string());
  s.gt = read_obj(dir / "gt.obj");
  for (int k = 0; k < s.config.views; ++k) {
    const auto vdir = dir / ("view_" + std::to_string(k));
    s.observations.push_back(load_observation(vdir, model.joint_names));
    s.features.push_back(read_feature_image(vdir / "features.sesf"));
    s.rigs.push_back(rig_from_json(read_json(vdir / "rig.json")));
  }
  return s;
}

std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw Error("not a directory: " + root.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "params.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sesdf
