#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sesdf/fusion/fusion.hpp"
#include "sesdf/geometry/primitives.hpp"
#include "sesdf/geometry/rotation.hpp"

namespace sesdf {
namespace {

PointTuple random_tuple(Rng& rng, int view) {
  PointTuple t;
  t.view = view;
  for (double& v : t.image) v = uniform(rng, -1, 1);
  t.space_channels = 9;
  for (int c = 0; c < 9; ++c) t.space[c] = 0.25 * c;
  t.d = uniform(rng, -1, 1);
  t.n = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  t.z = uniform(rng, -2, 2);
  return t;
}

void expect_tuple_near(const PointTuple& a, const PointTuple& b, double tol) {
  for (int c = 0; c < kImageChannels; ++c) EXPECT_NEAR(a.image[c], b.image[c], tol);
  for (int c = 0; c < a.space_channels; ++c) EXPECT_NEAR(a.space[c], b.space[c], tol);
  EXPECT_NEAR(a.d, b.d, tol);
  EXPECT_NEAR((a.n - b.n).norm(), 0.0, tol);
  EXPECT_NEAR(a.z, b.z, tol);
}

TEST(Fuse, WorkedExampleWeights) {
  Rng rng(1);
  const std::vector<PointTuple> t{random_tuple(rng, 0), random_tuple(rng, 1)};
  const FusionResult r = fuse_occlusion_aware(t, {1.0 / 0.1, 1.0 / 0.3});
  EXPECT_NEAR(r.weights[0], 0.75, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.25, 1e-15);
  const FusionResult e = fuse_occlusion_aware(t, {1.0 / 0.2, 1.0 / 0.2});
  EXPECT_EQ(e.weights[0], 0.5);
  EXPECT_EQ(e.weights[1], 0.5);
  EXPECT_NEAR(r.tuple.d, 0.75 * t[0].d + 0.25 * t[1].d, 1e-15);
}

TEST(Fuse, SingleViewIsIdentity) {
  Rng rng(2);
  const std::vector<PointTuple> t{random_tuple(rng, 0)};
  for (const FusionResult& r : {fuse_average(t), fuse_occlusion_aware(t, {3.7})}) {
    EXPECT_EQ(r.weights, std::vector<double>{1.0});
    expect_tuple_near(r.tuple, t[0], 0.0);
  }
}

TEST(Fuse, AverageExamples) {
  Rng rng(3);
  PointTuple a = random_tuple(rng, 0), b = a;
  b.view = 1;
  expect_tuple_near(fuse_average({a, b}).tuple, a, 1e-15);
  a.d = 0.0;
  b.d = 1.0;
  EXPECT_EQ(fuse_average({a, b}).tuple.d, 0.5);
  EXPECT_THROW(fuse_average({}), Error);
}

TEST(Fuse, ConvexPermutationInvariantAndDominant) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<PointTuple> t;
    std::vector<double> w;
    for (int i = 0; i < n; ++i) {
      t.push_back(random_tuple(rng, i));
      w.push_back(1.0 / std::max(uniform(rng, 0, 0.5), 1e-3));
    }
    const FusionResult r = fuse_occlusion_aware(t, w);
    double sum = 0.0;
    for (double v : r.weights) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    for (int c = 0; c < kImageChannels; ++c) {
      double lo = 1e9, hi = -1e9;
      for (const PointTuple& x : t) {
        lo = std::min(lo, x.image[c]);
        hi = std::max(hi, x.image[c]);
      }
      EXPECT_GE(r.tuple.image[c], lo - 1e-12);
      EXPECT_LE(r.tuple.image[c], hi + 1e-12);
    }
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<PointTuple> tp;
    std::vector<double> wp;
    for (int i : perm) {
      tp.push_back(t[i]);
      wp.push_back(w[i]);
    }
    expect_tuple_near(fuse_occlusion_aware(tp, wp).tuple, r.tuple, 1e-12);
  }

  Rng r2(5);
  const std::vector<PointTuple> t{random_tuple(r2, 0), random_tuple(r2, 1), random_tuple(r2, 2)};
  double previous = 1e9;
  for (double gap : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    const PointTuple f = fuse_occlusion_aware(t, {1.0 / gap, 1.0 / 0.2, 1.0 / 0.3}).tuple;
    const double dist = std::abs(f.d - t[0].d) + std::abs(f.z - t[0].z);
    EXPECT_LT(dist, previous);
    previous = dist;
  }
  EXPECT_LT(previous, 1e-3);
}

TEST(NormalWeight, Examples) {
  EXPECT_NEAR(normal_weight(Vec3(0, 0, -1), Vec3(0, 0, 1)), std::tanh(std::numbers::pi), 1e-15);
  EXPECT_NEAR(normal_weight(Vec3(0, 0, -1), Vec3(0, 0, 1)), 0.99627, 1e-5);
  EXPECT_EQ(normal_weight(Vec3(0, 0, 2), Vec3(0, 0, 1)), 0.0);
  EXPECT_NEAR(normal_weight(Vec3(1, 0, 0), Vec3(0, 0, 1)), 0.91715, 1e-5);
  EXPECT_EQ(normal_weight(Vec3::Zero(), Vec3(0, 0, 1)), 0.0);
}

class CubeBody : public ::testing::Test {
 protected:
  CubeBody()
      : body_(make_cube(), std::vector<int>(8, 0), 1, 8),
        vertices_(body_.queries().mesh().vertices) {
    ViewRig front;  // looks along +z
    ViewRig back;
    back.rotation = rotation_y(std::numbers::pi);
    ViewRig side;
    side.rotation = rotation_y(std::numbers::pi / 2);
    rigs_ = {front, back, side};
  }
  FusionContext ctx() const { return {&body_, &vertices_, &rigs_}; }
  BodyContext body_;
  VertexIndex vertices_;
  std::vector<ViewRig> rigs_;
};

TEST_F(CubeBody, OcclusionWeightExamples) {
  const MeshQueries& q = body_.queries();
  const double eps = occlusion_epsilon(q);
  EXPECT_NEAR(eps, 1e-3 * std::sqrt(12.0), 1e-15);
  EXPECT_EQ(occlusion_weight(Vec3(0.2, 0.1, -1.0), rigs_[0], q, eps), 1.0 / eps);
  EXPECT_NEAR(occlusion_weight(Vec3(0.2, 0.1, -0.7), rigs_[0], q, eps), 1.0 / 0.3, 1e-9);
  EXPECT_EQ(occlusion_weight(Vec3(5, 0, 0), rigs_[0], q, eps), 1.0 / eps);
  // Seen from behind, the same point is 1.7 deep.
  EXPECT_NEAR(occlusion_weight(Vec3(0.2, 0.1, -0.7), rigs_[1], q, eps), 1.0 / 1.7, 1e-9);
}

class SphereBody : public ::testing::Test {
 protected:
  SphereBody()
      : body_(make_icosphere(1.0, 3), std::vector<int>(642, 0), 1, 8),
        vertices_(body_.queries().mesh().vertices) {
    ViewRig back;
    back.rotation = rotation_y(std::numbers::pi);
    ViewRig side;
    side.rotation = rotation_y(std::numbers::pi / 2);
    rigs_ = {ViewRig(), back, side};
  }
  FusionContext ctx() const { return {&body_, &vertices_, &rigs_}; }
  BodyContext body_;
  VertexIndex vertices_;
  std::vector<ViewRig> rigs_;
};

TEST_F(SphereBody, VisibilityStrategy) {
  // The front camera sees z < 0, the back one z > 0 and the side one
  // (looking along -x) the x > 0 hemisphere.
  bool fallback = true;
  const auto w = fusion_weights(FusionMode::kVisibility, ctx(), Vec3(-0.55, 0.0, -0.9), &fallback);
  EXPECT_FALSE(fallback);
  EXPECT_EQ(w, (std::vector<double>{1.0, 0.0, 0.0}));
  const auto w2 = fusion_weights(FusionMode::kVisibility, ctx(), Vec3(0.7, 0.0, -0.7), &fallback);
  EXPECT_EQ(w2[1], 0.0);
  EXPECT_EQ(w2[0], 0.5);
  EXPECT_EQ(w2[2], 0.5);
  for (double v : fusion_weights(FusionMode::kAverage, ctx(), Vec3(0, 0, -1.1))) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST_F(SphereBody, VisibilityFallbackAndSingleVisible) {
  const std::vector<ViewRig> back_only{rigs_[1]};
  const FusionContext c{&body_, &vertices_, &back_only};
  bool fallback = false;
  const auto w = fusion_weights(FusionMode::kVisibility, c, Vec3(0, 0, -1.1), &fallback);
  EXPECT_TRUE(fallback);
  EXPECT_EQ(w, std::vector<double>{1.0});

  const std::vector<ViewRig> pair{rigs_[1], rigs_[0]};
  const FusionContext c2{&body_, &vertices_, &pair};
  Rng rng(1);
  const std::vector<PointTuple> t{random_tuple(rng, 0), random_tuple(rng, 1)};
  const FusionResult r = fuse(FusionMode::kVisibility, c2, Vec3(0, 0, -1.1), t);
  EXPECT_FALSE(r.fallback);
  EXPECT_EQ(r.weights, (std::vector<double>{0.0, 1.0}));
  expect_tuple_near(r.tuple, t[1], 0.0);
}

TEST_F(SphereBody, NormalStrategyPrefersFrontFacingViews) {
  const auto w = fusion_weights(FusionMode::kNormal, ctx(), Vec3(0, 0, -1.1));
  EXPECT_GT(w[0], w[2]);
  EXPECT_GT(w[2], w[1]);
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
}

TEST_F(CubeBody, OcclusionStrategyNormalizes) {
  const auto w = fusion_weights(FusionMode::kOcclusion, ctx(), Vec3(0.2, 0.1, -0.7));
  EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
  EXPECT_GT(w[0], w[1]);
  EXPECT_THROW(fusion_mode_from_string("attention"), Error);
  for (FusionMode m : {FusionMode::kOcclusion, FusionMode::kAverage, FusionMode::kNormal, FusionMode::kVisibility}) {
    EXPECT_EQ(fusion_mode_from_string(to_string(m)), m);
  }
}

}  // namespace
}  // namespace sesdf
