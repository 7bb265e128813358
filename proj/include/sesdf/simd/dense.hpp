#pragma once

#include <cstddef>

// Row-major batched dense-layer primitives built on the active kernel table.
//   X  : rows x in        W : out x in        b : out
//   Y  : rows x out
namespace sesdf::simd {

// Y = X W^T + b   (b may be null)
void dense_forward(const double* x, std::size_t rows, std::size_t in, const double* w, const double* b,
                   std::size_t out, double* y);

// dX = dY W       (overwrites dX)
void dense_backward_input(const double* dy, std::size_t rows, std::size_t out, const double* w,
                          std::size_t in, double* dx);

// dW += dY^T X ;  db += column sums of dY   (db may be null)
void dense_backward_params(const double* dy, std::size_t rows, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db);

}  // namespace sesdf::simd
