#pragma once

#include <span>
#include <vector>

#include "lshm/likelihood.hpp"
#include "lshm/optimizer.hpp"
#include "lshm/types.hpp"

namespace lshm {

struct CoxParams {
  double zeta = 1.0;  // Weibull shape
  double eta = 1.0;   // Weibull scale
  std::vector<double> coeffs;

  // Throws std::invalid_argument unless shape and scale are positive finite
  // and coefficients finite.
  void validate() const;
};

// Proportional-hazards baseline on the unit-step grid:
//   lambda(t) = (zeta/eta) (t/eta)^(zeta-1) exp(coeffs . x(t)), t = 1, 2, ...
// Throws numeric_range_error when the value leaves the representable range.
double cox_hazard(const CoxParams& params, std::size_t t,
                  std::span<const double> x_row);

std::vector<double> cox_lambda_series(const CoxParams& params, const Lifetime& life);

// Discrete regularized loss under the same likelihood and censoring
// conventions as the latent model; coefficients are penalized by
// spec.c1_alpha (shape and scale never are; c2_beta is unused).
double cox_loss(const CoxParams& params, std::span<const Lifetime> data,
                const RegularizedLossSpec& spec);

struct CoxFit {
  CoxParams params;
  double loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;  // winning start; coordinates are
                                  // (log zeta, log eta, coeffs...)
  bool line_search_warning = false;
};

// Fits the baseline by the same coordinate-descent engine as the latent
// model, over (log zeta, log eta, coeffs) so positivity needs no
// constraints. Multi-start across zeta in {0.5, 1, 2} with eta started at
// the mean observed lifetime; the best final loss wins.
CoxFit fit_cox(std::span<const Lifetime> data, const RegularizedLossSpec& spec,
               const FitConfig& cfg);

}  // namespace lshm
