#pragma once

#include <cstddef>

// Inner-loop kernels for the dense layers. Every ISA variant implements the
// same table; the scalar table is the reference the others are tested against.
// Variants may differ from scalar in the last bits (FMA contraction, different
// summation order) but a given variant is deterministic.
namespace sesdf::simd {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[j] = dot(a, b[j]), j < 4; `a` is loaded once per element
  void (*dot_1x4)(const double* a, const double* const* b, std::size_t n, double* out);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[j] += alpha[j] * x, j < 4; `x` is loaded once per element
  void (*axpy_4)(const double* alpha, const double* x, double* const* y, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Selected once per process: the best supported variant, unless the
// SESDF_SIMD environment variable names one (`scalar`, `avx2`, `neon`).
const KernelTable& active_kernels();

// Overrides the selection (tests and benchmarks); pass nullptr to restore.
void override_kernels(const KernelTable* table);

}  // namespace sesdf::simd
