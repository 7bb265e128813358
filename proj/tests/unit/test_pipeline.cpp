#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sesdf/cli/pipeline.hpp"

namespace sesdf {
namespace {

SceneConfig tiny() {
  SceneConfig c;
  c.image = 96;
  return c;
}

TEST(Pipeline, SceneDirNames) {
  EXPECT_EQ(scene_dir_name(7).string(), "scene_00007");
  EXPECT_EQ(scene_dir_name(1000).string(), "scene_01000");
}

TEST(Pipeline, StateSourceParsing) {
  EXPECT_EQ(state_source_from_string("fit"), StateSource::kFit);
  EXPECT_EQ(state_source_from_string("gt"), StateSource::kGroundTruth);
  EXPECT_THROW(state_source_from_string("truth"), Error);
}

TEST(Pipeline, TruthHasZeroCalibrationError) {
  const Scene s = generate_scene(3, tiny());
  const SceneFit truth{s.params, s.rigs, {}};
  const CalibrationError e = calibration_error(s, truth);
  EXPECT_LT(e.rotation_degrees, 1e-6);
  EXPECT_LT(e.translation_fraction, 1e-12);
  SceneFit fewer = truth;
  fewer.rigs.pop_back();
  EXPECT_THROW(calibration_error(s, fewer), Error);
}

TEST(Pipeline, DatasetAndFitState) {
  const auto root = std::filesystem::temp_directory_path() / "sesdf_pipeline_test";
  std::filesystem::remove_all(root);
  DatasetConfig d;
  d.scenes = 2;
  d.first_seed = 40;
  d.scene = tiny();
  const auto dirs = generate_dataset(root, d);
  ASSERT_EQ(dirs.size(), 2u);
  EXPECT_EQ(list_scenes(root), dirs);
  const Scene s = load_scene(dirs[0]);
  EXPECT_EQ(s.seed, 40u);
  EXPECT_THROW(scene_state(s, dirs[0], StateSource::kFit), Error);
  save_fit({s.params, s.rigs, {}}, dirs[0] / "fit.json");
  const SceneState st = scene_state(s, dirs[0], StateSource::kFit);
  ASSERT_EQ(st.rigs.size(), s.rigs.size());
  EXPECT_TRUE(st.rigs[1].rotation.isApprox(s.rigs[1].rotation, 1e-12));
  std::filesystem::remove_all(root);
}

TEST(Pipeline, ViewCountChecked) {
  const Scene s = generate_scene(5, tiny());
  ModelSet m;
  m.initialize(1);
  SceneReconOptions o;
  o.views = 4;
  o.recon.resolution = 4;
  EXPECT_THROW(reconstruct_scene(m, s, ground_truth_state(s), o), Error);
}

TEST(Pipeline, FusionCsv) {
  const auto path = std::filesystem::temp_directory_path() / "sesdf_fusion.csv";
  write_fusion_csv({{FusionMode::kOcclusion, 0.5, 0.25}, {FusionMode::kAverage, 1.0, 2.0}}, path);
  std::ifstream is(path);
  std::string a, b, c;
  std::getline(is, a);
  std::getline(is, b);
  std::getline(is, c);
  EXPECT_EQ(a, "fusion,chamfer,p2s");
  EXPECT_EQ(b, "occlusion,0.5,0.25");
  EXPECT_EQ(c, "average,1,2");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace sesdf
