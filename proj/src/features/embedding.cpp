#include "sesdf/features/embedding.hpp"

#include <cmath>

#include "sesdf/common.hpp"

namespace sesdf {

AffineEmbedding::AffineEmbedding(int in_dim, int out_dim)
    : in(in_dim), out(out_dim), weight(static_cast<std::size_t>(in_dim) * out_dim, 0.0), bias(out_dim, 0.0) {}

void AffineEmbedding::initialize(Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : weight) w = uniform(rng, -a, a);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void AffineEmbedding::apply(const double* x, double* y) const {
  for (int o = 0; o < out; ++o) {
    double s = bias[o];
    const double* w = weight.data() + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) s += w[i] * x[i];
    y[o] = s;
  }
}

std::vector<double> AffineEmbedding::apply(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != in) throw Error("embedding: input has wrong dimension");
  std::vector<double> y(out);
  apply(x.data(), y.data());
  return y;
}

}  // namespace sesdf
