#pragma once

#include <cstdint>
#include <vector>

namespace sesdf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
};

// One bias-corrected adaptive-moment update. Throws on non-finite gradients.
void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace sesdf
