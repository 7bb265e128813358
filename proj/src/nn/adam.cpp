#include "sesdf/nn/adam.hpp"

#include <cmath>

#include "sesdf/common.hpp"

namespace sesdf {

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state, double lr,
               const AdamConfig& c) {
  if (grads.size() != params.size()) throw Error("adam_step: gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw Error("adam_step: non-finite gradient");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

}  // namespace sesdf
