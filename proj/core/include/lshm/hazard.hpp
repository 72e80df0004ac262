#pragma once

#include <span>

#include "lshm/types.hpp"

namespace lshm {

// Transient hazard contribution for one step: exp(alpha0 + alpha . x_row).
// Strictly positive. Throws dimension_error on size mismatch,
// numeric_range_error when |exponent| > 700.
double g_term(const ModelParams& params, std::span<const double> x_row);

// Latent hazard increment for one step: exp(beta0 + beta . x_row).
// Same guarantees as g_term. The latent term mu(j) is the running sum of
// these increments, so it is nondecreasing in j regardless of covariates.
double mu_step(const ModelParams& params, std::span<const double> x_row);

// Full per-step decomposition over a lifetime:
//   mu(j) = mu(j-1) + mu_step(x(j)),  mu(0) = 0
//   g(j) = g_term(x(j))
//   lambda(j) = mu(j) + g(j)
HazardTrajectory trajectory(const ModelParams& params, const Lifetime& life);

// Sum of lambda(1..upto_step), upto_step being 1-based and <= trajectory
// length. Throws dimension_error when out of range or upto_step == 0.
double cumulative_hazard(const HazardTrajectory& traj, std::size_t upto_step);

namespace detail {

// exp with the representable-range guard shared by every hazard term.
double guarded_exp(double exponent);

// Linear predictor intercept + dot(coeffs, x); sizes must already agree.
double linear_predictor(double intercept, std::span<const double> coeffs,
                        std::span<const double> x_row);

}  // namespace detail

}  // namespace lshm
