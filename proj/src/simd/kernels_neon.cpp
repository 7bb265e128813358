// aarch64 only; NEON is architecturally guaranteed there.
#include <arm_neon.h>

#include "sesdf/simd/kernels.hpp"

namespace sesdf::simd::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot_1x4(const double* a, const double* const* b, std::size_t n, double* out) {
  float64x2_t s[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    for (int j = 0; j < 4; ++j) s[j] = vfmaq_f64(s[j], va, vld1q_f64(b[j] + i));
  }
  for (int j = 0; j < 4; ++j) {
    double r = vaddvq_f64(s[j]);
    for (std::size_t k = i; k < n; ++k) r += a[k] * b[j][k];
    out[j] = r;
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_4(const double* alpha, const double* x, double* const* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vx = vld1q_f64(x + i);
    for (int j = 0; j < 4; ++j) {
      vst1q_f64(y[j] + i, vfmaq_f64(vld1q_f64(y[j] + i), vdupq_n_f64(alpha[j]), vx));
    }
  }
  for (; i < n; ++i) {
    for (int j = 0; j < 4; ++j) y[j][i] += alpha[j] * x[i];
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{"neon", dot, dot_1x4, axpy, axpy_4};
  return t;
}

}  // namespace sesdf::simd::neon
