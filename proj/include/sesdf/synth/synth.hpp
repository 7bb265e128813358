#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "sesdf/body/body_model.hpp"
#include "sesdf/calib/observation.hpp"
#include "sesdf/features/feature_image.hpp"

namespace sesdf {

constexpr int kSceneVersion = 1;

// Smooth 3-octave value noise in [-1, 1]: trilinear interpolation with a
// quintic fade between lattice values uniform in [-1, 1]. Octave o has
// frequency base * 2^o and weight 2^-o (normalized to sum 1).
class ValueNoise {
 public:
  explicit ValueNoise(uint64_t seed, double base_frequency = 4.0, int octaves = 3);
  double operator()(const Vec3& x) const;

 private:
  double lattice(int64_t i, int64_t j, int64_t k, int octave) const;
  double octave(const Vec3& x, int o) const;
  uint64_t seed_;
  double base_;
  int octaves_;
};

// Per-vertex clearance: the shorter of the inward and outward ray distances
// along the vertex normal to any other part of the mesh.
std::vector<double> vertex_clearance(const TriangleMesh& mesh, const std::vector<Vec3>& normals);

// lbs_forward displaced along vertex normals by cloth_amp * bbox_diagonal *
// noise(rest position). Each displacement is capped at 0.45 of the vertex's
// clearance so the result stays free of self-intersections, then halved
// around any face that would fold. Rejects amplitudes above half the median
// limb thickness.
TriangleMesh generate_clothed_mesh(const BodyModel& model, const BodyParams& params, double cloth_amp,
                                   uint64_t noise_seed);

struct SceneConfig {
  int views = 3;
  int image = 512;
  double cloth_amp = 0.02;
  double shape_sigma = 0.5;
  double pose_sigma = 0.15;
  double jitter_degrees = 0.0;        // rig rotation jitter
  double jitter_translation = 0.0;    // fraction of the body diagonal
  bool blocker = false;               // view 0 half covered by a box
  int template_seed = 0;
  int template_resolution = 8;

  nlohmann::json to_json() const;
  static SceneConfig from_json(const nlohmann::json& j);
};

struct Scene {
  int version = kSceneVersion;
  uint64_t seed = 0;
  SceneConfig config;
  BodyParams params;
  TriangleMesh gt;
  std::vector<ViewRig> rigs;          // true cameras
  std::vector<Observation> observations;
  std::vector<FeatureImage> features;
};

// The scene's body model (regenerated from the template settings).
const BodyModel& scene_body_model(const SceneConfig& config);

// Nominal rigs: yaw k * 360 / n about +y, body centred in the image, depth
// origin at the body centre, 85% of the image spanned by the bbox diagonal.
std::vector<ViewRig> nominal_rigs(const TriangleMesh& body, int views, int image);

// Rigs around the body with optional jitter, plus masks and keypoints of
// the ground truth. Feature images are rendered separately.
struct ViewSet {
  std::vector<ViewRig> rigs;
  std::vector<Observation> observations;
};
ViewSet generate_views(const BodyModel& model, const BodyParams& params, const TriangleMesh& gt,
                       const SceneConfig& config, uint64_t jitter_seed);

// A box between view 0's camera and the subject covering the half of the
// silhouette with u below the silhouette's median column.
TriangleMesh make_blocker(const TriangleMesh& gt, const ViewRig& rig);

Scene generate_scene(uint64_t seed, const SceneConfig& config);

// Layout: params.json (version, seed, config), body.json (ground-truth
// body parameters), gt.obj, view_k/{mask.pgm, keypoints.json, features.sesf,
// rig.json}.
void export_scene(const Scene& scene, const std::filesystem::path& dir);
Scene load_scene(const std::filesystem::path& dir);

// Directory names scene_0000, scene_0001, ... under a dataset root, sorted.
std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& root);

}  // namespace sesdf
