#pragma once

#include <cstdint>
#include <vector>

#include "sesdf/common.hpp"

namespace sesdf {

constexpr double kProbabilityClamp = 1e-7;

// Per-sample terms with their derivatives (outputs may be null).

// lambda_d |d| + lambda_n ||n - n_gt||; the norm's derivative is taken as
// zero at n = n_gt, and sign(0) = 0.
double surface_term(double d, const Vec3& n, const Vec3& n_gt, double lambda_d, double lambda_n, double* dd,
                    Vec3* dn);
// Binary cross entropy of sigmoid(logit) against a 0/1 label, with the
// probability clamped to [1e-7, 1 - 1e-7]; zero derivative where clamped.
double bce_logit_term(double logit, uint8_t label, double* dlogit);
// (||n|| - 1)^2
double eikonal_term(const Vec3& n, Vec3* dn);

double sigmoid(double x);

// Batch means.
double loss_surface(const std::vector<double>& d, const std::vector<Vec3>& n, const std::vector<Vec3>& n_gt,
                    double lambda_d = 1.0, double lambda_n = 1.0);
// `prediction` are probabilities.
double loss_occupancy(const std::vector<double>& prediction, const std::vector<uint8_t>& label);
double loss_eikonal(const std::vector<Vec3>& n);

struct LossWeights {
  double surface = 1.0;    // lambda_s
  double occupancy = 1.0;  // lambda_o
  double eikonal = 0.1;    // lambda_r
  double distance = 1.0;   // lambda_d
  double normal = 1.0;     // lambda_n
};

struct LossParts {
  double surface = 0.0;
  double occupancy = 0.0;
  double eikonal = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& w);

}  // namespace sesdf
