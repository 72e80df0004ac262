#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lshm/types.hpp"

namespace lshm {

// Quadratic penalty constants for the regularized loss
//   W = -log L + c1_alpha * |alpha|^2 + c2_beta * |beta|^2.
// Intercepts are left unpenalized unless penalize_intercepts is set.
struct RegularizedLossSpec {
  double c1_alpha = 0.0;
  double c2_beta = 0.0;
  bool penalize_intercepts = false;
};

// Negative Hessian of the log-likelihood at params (penalty excluded),
// row-major over the flattened order (alpha0, alpha, beta0, beta).
struct ObservedInformation {
  std::size_t dim = 0;
  std::vector<double> matrix;

  double at(std::size_t r, std::size_t c) const { return matrix[r * dim + c]; }
};

// Discrete log-likelihood. A Failed lifetime contributes
//   sum_{j<T} -lambda(j) + log(1 - exp(-lambda(T)))
// and a Censored one sum_{j<=S} -lambda(j). Summation runs over lifetimes
// in id order so the result is reproducible for any input ordering.
// Throws numeric_range_error when a terminal hazard is below 1e-300
// (the failure term would lose all precision) rather than clamping.
double log_likelihood(const ModelParams& params, std::span<const Lifetime> data);

double penalty(const ModelParams& params, const RegularizedLossSpec& spec);

double regularized_loss(const ModelParams& params, std::span<const Lifetime> data,
                        const RegularizedLossSpec& spec);

// Exact gradient of regularized_loss in the flattened parameter order.
std::vector<double> gradient(const ModelParams& params,
                             std::span<const Lifetime> data,
                             const RegularizedLossSpec& spec);

// Observed information (penalty excluded). Positive semidefinite at any
// point where the weights are well defined; positive definite at interior
// optima of the regularized loss for generic data.
ObservedInformation observed_information(const ModelParams& params,
                                         std::span<const Lifetime> data);

namespace series {

// log(1 - exp(-lam)) without cancellation on either end.
double log1m_exp(double lam);

// Log-likelihood of one lifetime given its per-step hazards. Shared by the
// latent model and the Cox baseline so censoring conventions cannot drift.
double loglik_from_lambda(std::span<const double> lambda, Event event);

// Per-step gradient weight: survival steps weigh +1 on d(lambda)/d(theta),
// the terminal failed step weighs -1 / (exp(lambda) - 1).
double terminal_weight(double lambda_terminal);

}  // namespace series

namespace detail {

// Lifetime indices sorted by id; fixes summation order.
std::vector<std::size_t> id_order(std::span<const Lifetime> data);

void check_data(const ModelParams& params, std::span<const Lifetime> data);

}  // namespace detail

}  // namespace lshm
