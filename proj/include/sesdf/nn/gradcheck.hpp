#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesdf/nn/model.hpp"

namespace sesdf {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;  // within worst_tensor
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps gradients at the
// round-off level of the difference quotient from reading as large errors.
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Central differences of L = sum_i r_i out_i (r fixed random) over the
// parameters of a bare network, no embeddings. max_per_tensor = 0 checks
// every coordinate; otherwise a random subset of each weight and bias.
GradCheckReport gradient_check(const Mlp& net, const std::vector<double>& input, std::size_t rows, double eps,
                               uint64_t seed = 1, std::size_t max_per_tensor = 0);

// Same with an input layout: embedded segments take their raw values through
// the layout's embeddings, whose weights and biases are checked as well.
GradCheckReport gradient_check(const Mlp& net, const InputLayout& layout, const std::vector<double>& input,
                               std::size_t rows, double eps, uint64_t seed = 1, std::size_t max_per_tensor = 0);

// Same against the total loss of a model set, covering both embeddings and
// every layer of both networks.
GradCheckReport gradient_check(const ModelSet& model, const PointBatch& surface, const PointBatch& occupancy,
                               const LossWeights& weights, double eps, uint64_t seed = 1,
                               std::size_t max_per_tensor = 0);

// Small random batches shaped for `model` (used by the CLI and tests).
void random_check_batches(const ModelSet& model, int views, std::size_t points, uint64_t seed, PointBatch& surface,
                          PointBatch& occupancy);

}  // namespace sesdf
