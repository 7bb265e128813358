#include "sesdf/nn/losses.hpp"

#include <algorithm>
#include <cmath>

namespace sesdf {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double surface_term(double d, const Vec3& n, const Vec3& n_gt, double lambda_d, double lambda_n, double* dd,
                    Vec3* dn) {
  const Vec3 diff = n - n_gt;
  const double len = diff.norm();
  if (dd) *dd = lambda_d * static_cast<double>((d > 0.0) - (d < 0.0));
  if (dn) *dn = len > 0.0 ? Vec3(lambda_n * diff / len) : Vec3::Zero();
  return lambda_d * std::abs(d) + lambda_n * len;
}

double bce_logit_term(double logit, uint8_t label, double* dlogit) {
  const double p = sigmoid(logit);
  const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  if (dlogit) *dlogit = (pc == p) ? p - static_cast<double>(label) : 0.0;
  return label ? -std::log(pc) : -std::log(1.0 - pc);
}

double eikonal_term(const Vec3& n, Vec3* dn) {
  const double len = n.norm();
  if (dn) *dn = len > 0.0 ? Vec3(2.0 * (len - 1.0) * n / len) : Vec3::Zero();
  return (len - 1.0) * (len - 1.0);
}

double loss_surface(const std::vector<double>& d, const std::vector<Vec3>& n, const std::vector<Vec3>& n_gt,
                    double lambda_d, double lambda_n) {
  if (d.size() != n.size() || n.size() != n_gt.size()) throw Error("loss_surface: size mismatch");
  if (d.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += surface_term(d[i], n[i], n_gt[i], lambda_d, lambda_n, nullptr, nullptr);
  return s / static_cast<double>(d.size());
}

double loss_occupancy(const std::vector<double>& prediction, const std::vector<uint8_t>& label) {
  if (prediction.size() != label.size()) throw Error("loss_occupancy: size mismatch");
  if (prediction.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double p = std::clamp(prediction[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    s += label[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return s / static_cast<double>(prediction.size());
}

double loss_eikonal(const std::vector<Vec3>& n) {
  if (n.empty()) return 0.0;
  double s = 0.0;
  for (const Vec3& v : n) s += eikonal_term(v, nullptr);
  return s / static_cast<double>(n.size());
}

double total_loss(const LossParts& parts, const LossWeights& w) {
  return w.surface * parts.surface + w.occupancy * parts.occupancy + w.eikonal * parts.eikonal;
}

}  // namespace sesdf
