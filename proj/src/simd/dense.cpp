#include "sesdf/simd/dense.hpp"

#include <algorithm>

#include "sesdf/simd/kernels.hpp"

namespace sesdf::simd {

void dense_forward(const double* x, std::size_t rows, std::size_t in, const double* w, const double* b,
                   std::size_t out, double* y) {
  const KernelTable& k = active_kernels();
  std::size_t r = 0;
  // Four input rows share each weight-row load.
  for (; r + 4 <= rows; r += 4) {
    const double* xs[4] = {x + r * in, x + (r + 1) * in, x + (r + 2) * in, x + (r + 3) * in};
    double acc[4];
    for (std::size_t o = 0; o < out; ++o) {
      k.dot_1x4(w + o * in, xs, in, acc);
      const double bias = b ? b[o] : 0.0;
      for (int j = 0; j < 4; ++j) y[(r + j) * out + o] = acc[j] + bias;
    }
  }
  for (; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      y[r * out + o] = k.dot(w + o * in, x + r * in, in) + (b ? b[o] : 0.0);
    }
  }
}

void dense_backward_input(const double* dy, std::size_t rows, std::size_t out, const double* w,
                          std::size_t in, double* dx) {
  const KernelTable& k = active_kernels();
  std::fill(dx, dx + rows * in, 0.0);
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    double* ys[4] = {dx + r * in, dx + (r + 1) * in, dx + (r + 2) * in, dx + (r + 3) * in};
    for (std::size_t o = 0; o < out; ++o) {
      const double alpha[4] = {dy[r * out + o], dy[(r + 1) * out + o], dy[(r + 2) * out + o],
                               dy[(r + 3) * out + o]};
      k.axpy_4(alpha, w + o * in, ys, in);
    }
  }
  for (; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) k.axpy(dy[r * out + o], w + o * in, dx + r * in, in);
  }
}

void dense_backward_params(const double* dy, std::size_t rows, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db) {
  const KernelTable& k = active_kernels();
  std::size_t o = 0;
  // Four weight rows share each input-row load.
  for (; o + 4 <= out; o += 4) {
    double* ws[4] = {dw + o * in, dw + (o + 1) * in, dw + (o + 2) * in, dw + (o + 3) * in};
    for (std::size_t r = 0; r < rows; ++r) {
      const double alpha[4] = {dy[r * out + o], dy[r * out + o + 1], dy[r * out + o + 2], dy[r * out + o + 3]};
      k.axpy_4(alpha, x + r * in, ws, in);
    }
  }
  for (; o < out; ++o) {
    for (std::size_t r = 0; r < rows; ++r) k.axpy(dy[r * out + o], x + r * in, dw + o * in, in);
  }
  if (db) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < out; ++j) db[j] += dy[r * out + j];
    }
  }
}

}  // namespace sesdf::simd
