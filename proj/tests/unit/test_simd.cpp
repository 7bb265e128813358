#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sesdf/simd/dense.hpp"
#include "sesdf/simd/kernels.hpp"

namespace sesdf::simd {
namespace {

std::vector<const KernelTable*> variants() {
  std::vector<const KernelTable*> v;
  if (avx2_kernels()) v.push_back(avx2_kernels());
  if (neon_kernels()) v.push_back(neon_kernels());
  return v;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Bound for reordered/fused summation of n products.
double tolerance(std::size_t n, double magnitude) { return 1e-14 * (n + 1) * magnitude; }

TEST(Kernels, ActiveTableIsReported) {
  const KernelTable& k = active_kernels();
  ASSERT_NE(k.name, nullptr);
  if (avx2_kernels()) EXPECT_STREQ(k.name, "avx2");
}

TEST(Kernels, VariantsMatchScalarOnAllTailLengths) {
  const KernelTable& ref = scalar_kernels();
  std::mt19937_64 rng(1);
  for (const KernelTable* k : variants()) {
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = random_vector(rng, n);
      std::vector<std::vector<double>> b(4);
      for (auto& x : b) x = random_vector(rng, n);
      const double* bp[4] = {b[0].data(), b[1].data(), b[2].data(), b[3].data()};

      double mag = 0.0;
      for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[0][i]);
      EXPECT_NEAR(k->dot(a.data(), b[0].data(), n), ref.dot(a.data(), b[0].data(), n), tolerance(n, mag));

      double o_ref[4], o_var[4];
      ref.dot_1x4(a.data(), bp, n, o_ref);
      k->dot_1x4(a.data(), bp, n, o_var);
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(o_var[j], o_ref[j], tolerance(n, 4.0 * n + 1.0));

      auto y_ref = b[1];
      auto y_var = b[1];
      ref.axpy(0.37, a.data(), y_ref.data(), n);
      k->axpy(0.37, a.data(), y_var.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y_var[i], y_ref[i], 1e-15 * (1.0 + std::abs(y_ref[i])));

      std::vector<std::vector<double>> ys_ref = b, ys_var = b;
      double* pr[4] = {ys_ref[0].data(), ys_ref[1].data(), ys_ref[2].data(), ys_ref[3].data()};
      double* pv[4] = {ys_var[0].data(), ys_var[1].data(), ys_var[2].data(), ys_var[3].data()};
      const double alpha[4] = {0.5, -1.25, 2.0, 1e-3};
      ref.axpy_4(alpha, a.data(), pr, n);
      k->axpy_4(alpha, a.data(), pv, n);
      for (int j = 0; j < 4; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
          EXPECT_NEAR(ys_var[j][i], ys_ref[j][i], 1e-15 * (1.0 + std::abs(ys_ref[j][i])));
        }
      }
    }
  }
}

TEST(Kernels, VariantIsDeterministic) {
  std::mt19937_64 rng(2);
  const auto a = random_vector(rng, 401);
  const auto b = random_vector(rng, 401);
  const KernelTable& k = active_kernels();
  EXPECT_EQ(k.dot(a.data(), b.data(), a.size()), k.dot(a.data(), b.data(), a.size()));
}

// Dense primitives against a naive triple loop, under each kernel table.
TEST(Dense, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  const std::size_t rows = 7, in = 13, out = 9;
  const auto x = random_vector(rng, rows * in);
  const auto w = random_vector(rng, out * in);
  const auto b = random_vector(rng, out);
  const auto dy = random_vector(rng, rows * out);

  std::vector<double> y_naive(rows * out), dx_naive(rows * in, 0.0), dw_naive(out * in, 0.0), db_naive(out, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in; ++i) s += x[r * in + i] * w[o * in + i];
      y_naive[r * out + o] = s;
      db_naive[o] += dy[r * out + o];
      for (std::size_t i = 0; i < in; ++i) {
        dx_naive[r * in + i] += dy[r * out + o] * w[o * in + i];
        dw_naive[o * in + i] += dy[r * out + o] * x[r * in + i];
      }
    }
  }

  std::vector<const KernelTable*> tables = {&scalar_kernels()};
  for (auto* t : variants()) tables.push_back(t);
  for (const KernelTable* t : tables) {
    override_kernels(t);
    std::vector<double> y(rows * out), dx(rows * in), dw(out * in, 0.0), db(out, 0.0);
    dense_forward(x.data(), rows, in, w.data(), b.data(), out, y.data());
    dense_backward_input(dy.data(), rows, out, w.data(), in, dx.data());
    dense_backward_params(dy.data(), rows, out, x.data(), in, dw.data(), db.data());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], y_naive[i], 1e-12) << t->name;
    for (std::size_t i = 0; i < dx.size(); ++i) EXPECT_NEAR(dx[i], dx_naive[i], 1e-12) << t->name;
    for (std::size_t i = 0; i < dw.size(); ++i) EXPECT_NEAR(dw[i], dw_naive[i], 1e-12) << t->name;
    for (std::size_t i = 0; i < db.size(); ++i) EXPECT_NEAR(db[i], db_naive[i], 1e-12) << t->name;
  }
  override_kernels(nullptr);
}

}  // namespace
}  // namespace sesdf::simd
