#pragma once

#include <vector>

#include "sesdf/util/rng.hpp"

namespace sesdf {

// Trainable affine map y = W x + b, W stored row-major (out x in).
struct AffineEmbedding {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  AffineEmbedding() = default;
  AffineEmbedding(int in_dim, int out_dim);

  // Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  void initialize(Rng& rng);
  void apply(const double* x, double* y) const;
  std::vector<double> apply(const std::vector<double>& x) const;
};

}  // namespace sesdf
