// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "sesdf/simd/kernels.hpp"

namespace sesdf::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot_1x4(const double* a, const double* const* b, std::size_t n, double* out) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  __m256d s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[0] + i), s0);
    s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[1] + i), s1);
    s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[2] + i), s2);
    s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[3] + i), s3);
  }
  double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
  for (; i < n; ++i) {
    r0 += a[i] * b[0][i];
    r1 += a[i] * b[1][i];
    r2 += a[i] * b[2][i];
    r3 += a[i] * b[3][i];
  }
  out[0] = r0;
  out[1] = r1;
  out[2] = r2;
  out[3] = r3;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_4(const double* alpha, const double* x, double* const* y, std::size_t n) {
  const __m256d a0 = _mm256_set1_pd(alpha[0]);
  const __m256d a1 = _mm256_set1_pd(alpha[1]);
  const __m256d a2 = _mm256_set1_pd(alpha[2]);
  const __m256d a3 = _mm256_set1_pd(alpha[3]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y[0] + i, _mm256_fmadd_pd(a0, vx, _mm256_loadu_pd(y[0] + i)));
    _mm256_storeu_pd(y[1] + i, _mm256_fmadd_pd(a1, vx, _mm256_loadu_pd(y[1] + i)));
    _mm256_storeu_pd(y[2] + i, _mm256_fmadd_pd(a2, vx, _mm256_loadu_pd(y[2] + i)));
    _mm256_storeu_pd(y[3] + i, _mm256_fmadd_pd(a3, vx, _mm256_loadu_pd(y[3] + i)));
  }
  for (; i < n; ++i) {
    y[0][i] += alpha[0] * x[i];
    y[1][i] += alpha[1] * x[i];
    y[2][i] += alpha[2] * x[i];
    y[3][i] += alpha[3] * x[i];
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{"avx2", dot, dot_1x4, axpy, axpy_4};
  return t;
}

}  // namespace sesdf::simd::avx2
