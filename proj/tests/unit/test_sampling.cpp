#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "sesdf/geometry/primitives.hpp"
#include "sesdf/sampling/sampling.hpp"
#include "sesdf/util/log.hpp"
#include "support/oracles.hpp"

namespace sesdf {
namespace {

TEST(SampleSurface, CubeFacesAreUniformByArea) {
  const TriangleMesh cube = make_cube();
  Rng rng(7);
  const auto samples = sample_surface(cube, 6000, rng);
  std::array<int, 6> counts{};
  for (const SurfaceSample& s : samples) {
    const Vec3 n = cube.face_normal(s.face);
    int axis;
    n.cwiseAbs().maxCoeff(&axis);
    counts[2 * axis + (n[axis] > 0 ? 1 : 0)]++;
    ASSERT_NEAR(std::abs(s.x[axis]), 1.0, 1e-12);
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 15.086);  // 5 dof, p = 0.01
}

TEST(SampleSurface, PointsLieOnTheirFace) {
  const TriangleMesh mesh = oracle::random_star_mesh(3);
  Rng rng(1);
  for (const SurfaceSample& s : sample_surface(mesh, 2000, rng)) {
    const Face& f = mesh.faces[s.face];
    const Vec3 p = s.barycentric[0] * mesh.vertices[f[0]] + s.barycentric[1] * mesh.vertices[f[1]] +
                   s.barycentric[2] * mesh.vertices[f[2]];
    ASSERT_LT((p - s.x).norm(), 1e-9);
    ASSERT_GE(s.barycentric.minCoeff(), 0.0);
    ASSERT_NEAR(s.barycentric.sum(), 1.0, 1e-12);
    ASSERT_NEAR(s.n_gt.norm(), 1.0, 1e-12);
  }
}

TEST(SampleSurface, SingleTriangleAndDeterminism) {
  TriangleMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  tri.faces = {{0, 1, 2}};
  Rng a(5), b(5);
  const auto sa = sample_surface(tri, 500, a);
  const auto sb = sample_surface(tri, 500, b);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].x, sb[i].x);
    EXPECT_GE(sa[i].x.x(), 0.0);
    EXPECT_GE(sa[i].x.y(), 0.0);
    EXPECT_LE(sa[i].x.x() + sa[i].x.y(), 1.0 + 1e-15);
    EXPECT_EQ(sa[i].x.z(), 0.0);
    EXPECT_EQ(sa[i].n_gt, Vec3(0, 0, 1));
  }
  TriangleMesh flat = tri;
  flat.vertices[2] = Vec3(2, 0, 0);
  EXPECT_THROW(sample_surface(flat, 10, a), Error);
}

TEST(OccupancyGt, CubeExamples) {
  const MeshQueries q(make_cube());
  EXPECT_EQ(occupancy_gt(q, Vec3(0, 0, 0)), 1);
  EXPECT_EQ(occupancy_gt(q, Vec3(2, 0, 0)), 0);
  EXPECT_EQ(occupancy_gt(q, Vec3(1, 0, 0)), 1);
  EXPECT_EQ(occupancy_gt(q, Vec3(1, 1, 1)), 1);
}

TEST(OccupancyGt, AgreesWithSignedDistanceAndParity) {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    const MeshQueries q(oracle::random_star_mesh(seed));
    Rng rng(seed);
    for (int i = 0; i < 300; ++i) {
      const Vec3 x(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5));
      const uint8_t o = occupancy_gt(q, x);
      ASSERT_EQ(o, q.signed_distance(x).distance <= 0.0 ? 1 : 0);
      ASSERT_EQ(o == 1, oracle::brute_force_inside(q.mesh(), x));
    }
  }
}

TEST(SampleOccupancy, SplitAndUniformPool) {
  const MeshQueries q(make_cube());
  Rng rng(2);
  const Aabb box = q.mesh().bounds().inflated(0.1);
  const auto s = sample_occupancy(q, 16, 0.01, box, rng);
  ASSERT_EQ(s.size(), 16u);
  for (int i = 0; i < 15; ++i) EXPECT_LT(q.signed_distance(s[i].x).distance, 0.1);
  EXPECT_TRUE(box.contains(s[15].x));
  EXPECT_THROW(sample_occupancy(q, 16, 0.0, box, rng), Error);
  EXPECT_THROW(sample_occupancy(q, 16, 0.1, Aabb(Vec3::Zero(), Vec3(1, 0, 1)), rng), Error);
}

TEST(SampleOccupancy, TinySigmaSplitsLabelsEvenly) {
  const MeshQueries q(make_icosphere(1.0, 3));
  Rng rng(9);
  const std::size_t n = 100000;
  const auto s = sample_occupancy(q, n, 1e-6, q.mesh().bounds().inflated(0.1), rng);
  std::size_t inside = 0, near = n - n / 16;
  for (std::size_t i = 0; i < near; ++i) inside += s[i].o_gt;
  EXPECT_NEAR(static_cast<double>(inside) / near, 0.5, 0.05);
}

TEST(SampleOccupancy, LabelsMatchOracle) {
  const MeshQueries q(oracle::random_star_mesh(4));
  Rng rng(4);
  for (const OccupancySample& s : sample_occupancy(q, 400, 0.05, q.mesh().bounds().inflated(0.1), rng)) {
    ASSERT_EQ(s.o_gt == 1, oracle::brute_force_inside(q.mesh(), s.x));
  }
}

TEST(DistanceEncode, Examples) {
  const std::vector<double> zero = distance_encode(0.0, 5);
  const std::vector<double> expected0{0, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  EXPECT_EQ(zero, expected0);
  EXPECT_EQ(distance_code_size(5), 13);

  const std::vector<double> half = distance_encode(0.5, 5);
  const std::vector<double> expected_half{0.5, 1, 0, 0, -1, 0, 1, 0, 1, 0, 1, 0, 1};
  ASSERT_EQ(half.size(), 13u);
  for (int k = 0; k < 13; ++k) EXPECT_NEAR(half[k], expected_half[k], 1e-14) << k;  // sin(16 pi) rounds to ~2e-15
  EXPECT_EQ(distance_encode(0.3, 0).size(), 3u);
  EXPECT_THROW(distance_encode(0.3, -1), Error);
}

TEST(DistanceEncode, ParityAndBounds) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double d = uniform(rng, -3, 3);
    const auto p = distance_encode(d, 5), m = distance_encode(-d, 5);
    ASSERT_EQ(m[0], -p[0]);
    for (int l = 0; l <= 5; ++l) {
      ASSERT_EQ(m[1 + 2 * l], -p[1 + 2 * l]);
      ASSERT_EQ(m[2 + 2 * l], p[2 + 2 * l]);
    }
    for (double v : p) ASSERT_LE(std::abs(v), std::max(std::abs(d), 1.0));
  }
}

TEST(SampleBatchIo, RoundTripAtSinglePrecision) {
  const MeshQueries q(oracle::random_star_mesh(5));
  Rng rng(3);
  SamplingConfig cfg;
  cfg.surface_count = 100;
  cfg.occupancy_count = 64;
  const SampleBatch b = make_sample_batch(q, cfg, rng);
  const auto path = std::filesystem::temp_directory_path() / "sesdf_batch.sesb";
  write_sample_batch(b, path);
  const SampleBatch r = read_sample_batch(path);
  std::filesystem::remove(path);
  ASSERT_EQ(r.surface.size(), 100u);
  ASSERT_EQ(r.occupancy.size(), 64u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(r.surface[i].x, b.surface[i].x.cast<float>().cast<double>());
    EXPECT_EQ(r.surface[i].n_gt, b.surface[i].n_gt.cast<float>().cast<double>());
  }
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(r.occupancy[i].o_gt, b.occupancy[i].o_gt);
}

TEST(SampleBatch, SameSeedSameBatch) {
  const MeshQueries q(oracle::random_star_mesh(6));
  SamplingConfig cfg;
  cfg.surface_count = cfg.occupancy_count = 200;
  Rng a(1), b(1);
  const SampleBatch x = make_sample_batch(q, cfg, a), y = make_sample_batch(q, cfg, b);
  for (std::size_t i = 0; i < 200; ++i) {
    ASSERT_EQ(x.surface[i].x, y.surface[i].x);
    ASSERT_EQ(x.occupancy[i].x, y.occupancy[i].x);
    ASSERT_EQ(x.occupancy[i].o_gt, y.occupancy[i].o_gt);
  }
}

}  // namespace
}  // namespace sesdf
