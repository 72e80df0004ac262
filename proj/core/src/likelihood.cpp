#include "lshm/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"

namespace lshm {

namespace series {

double log1m_exp(double lam) {
  // Split at log 2: below it expm1 keeps precision, above it log1p does.
  if (lam <= 0.6931471805599453) return std::log(-std::expm1(-lam));
  return std::log1p(-std::exp(-lam));
}

double loglik_from_lambda(std::span<const double> lambda, Event event) {
  if (lambda.empty()) throw dimension_error("empty hazard series");
  double out = 0.0;
  const std::size_t t_max = lambda.size();
  for (std::size_t j = 0; j + 1 < t_max; ++j) out -= lambda[j];
  if (event == Event::Failed) {
    const double lam_t = lambda[t_max - 1];
    if (lam_t < 1e-300) {
      throw numeric_range_error(
          "terminal hazard underflow: 1 - exp(-lambda(T)) has no precision");
    }
    out += log1m_exp(lam_t);
  } else {
    out -= lambda[t_max - 1];
  }
  return out;
}

double terminal_weight(double lambda_terminal) {
  return -1.0 / std::expm1(lambda_terminal);
}

}  // namespace series

namespace detail {

std::vector<std::size_t> id_order(std::span<const Lifetime> data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
  return order;
}

void check_data(const ModelParams& params, std::span<const Lifetime> data) {
  params.validate();
  if (data.empty()) throw data_error("empty dataset");
  for (const Lifetime& life : data) {
    life.validate();
    if (life.n_features() != params.n_features()) {
      throw dimension_error("lifetime '" + life.id + "' has " +
                            std::to_string(life.n_features()) +
                            " features, parameters expect " +
                            std::to_string(params.n_features()));
    }
  }
}

}  // namespace detail

namespace {

double lifetime_loglik(const ModelParams& params, const Lifetime& life) {
  const std::size_t t_max = life.length();
  double out = 0.0;
  double mu = 0.0;
  for (std::size_t j = 0; j < t_max; ++j) {
    const auto x = life.covariates.row(j);
    mu += mu_step(params, x);
    const double lam = mu + g_term(params, x);
    if (life.event == Event::Failed && j + 1 == t_max) {
      if (lam < 1e-300) {
        throw numeric_range_error(
            "lifetime '" + life.id +
            "': terminal hazard underflow, 1 - exp(-lambda(T)) has no precision");
      }
      out += series::log1m_exp(lam);
    } else {
      out -= lam;
    }
  }
  return out;
}

// Adds one lifetime's gradient of -log L into grad (flattened order).
void accumulate_gradient(const ModelParams& params, const Lifetime& life,
                         std::vector<double>& grad) {
  const std::size_t p = params.n_features();
  const std::size_t t_max = life.length();
  // Running d(mu)/d(beta~): index 0 is the intercept, then the P slopes.
  std::vector<double> dmu(p + 1, 0.0);
  double mu = 0.0;
  for (std::size_t j = 0; j < t_max; ++j) {
    const auto x = life.covariates.row(j);
    const double minc = mu_step(params, x);
    const double gval = g_term(params, x);
    mu += minc;
    dmu[0] += minc;
    for (std::size_t k = 0; k < p; ++k) dmu[1 + k] += x[k] * minc;

    const bool terminal_failed = life.event == Event::Failed && j + 1 == t_max;
    double w = 1.0;
    if (terminal_failed) {
      const double lam = mu + gval;
      if (lam < 1e-300) {
        throw numeric_range_error("lifetime '" + life.id +
                                  "': terminal hazard underflow");
      }
      w = series::terminal_weight(lam);
    }
    grad[0] += w * gval;
    for (std::size_t k = 0; k < p; ++k) grad[1 + k] += w * x[k] * gval;
    grad[1 + p] += w * dmu[0];
    for (std::size_t k = 0; k < p; ++k) grad[2 + p + k] += w * dmu[1 + k];
  }
}

// Adds one lifetime's negative log-likelihood Hessian into info (row-major).
// Survival steps contribute the second derivatives of lambda alone; the
// terminal failed step additionally contributes the rank-one outer product
// of d(lambda) with weight exp(-lam) / (1 - exp(-lam))^2, the only place
// the alpha and beta blocks couple.
void accumulate_information(const ModelParams& params, const Lifetime& life,
                            std::vector<double>& info) {
  const std::size_t p = params.n_features();
  const std::size_t dim = 2 * p + 2;
  const std::size_t t_max = life.length();
  std::vector<double> dmu(p + 1, 0.0);
  std::vector<double> s_bb((p + 1) * (p + 1), 0.0);  // running sum of xt xt^T minc
  std::vector<double> xt(p + 1, 1.0);
  double mu = 0.0;
  for (std::size_t j = 0; j < t_max; ++j) {
    const auto x = life.covariates.row(j);
    for (std::size_t k = 0; k < p; ++k) xt[1 + k] = x[k];
    const double minc = mu_step(params, x);
    const double gval = g_term(params, x);
    mu += minc;
    for (std::size_t r = 0; r <= p; ++r) {
      dmu[r] += xt[r] * minc;
      for (std::size_t c = 0; c <= p; ++c) s_bb[r * (p + 1) + c] += xt[r] * xt[c] * minc;
    }

    const bool terminal_failed = life.event == Event::Failed && j + 1 == t_max;
    double w_curv = 1.0;  // weight on the second derivatives of lambda
    if (terminal_failed) {
      const double lam = mu + gval;
      if (lam < 1e-300) {
        throw numeric_range_error("lifetime '" + life.id +
                                  "': terminal hazard underflow");
      }
      w_curv = series::terminal_weight(lam);
      const double one_m_s = -std::expm1(-lam);          // 1 - exp(-lam)
      const double w_outer = std::exp(-lam) / (one_m_s * one_m_s);
      // d(lambda) in flattened order: (xt * g | dmu).
      for (std::size_t r = 0; r < dim; ++r) {
        const double ur = r <= p ? xt[r] * gval : dmu[r - p - 1];
        for (std::size_t c = 0; c < dim; ++c) {
          const double uc = c <= p ? xt[c] * gval : dmu[c - p - 1];
          info[r * dim + c] += w_outer * ur * uc;
        }
      }
    }
    for (std::size_t r = 0; r <= p; ++r) {
      for (std::size_t c = 0; c <= p; ++c) {
        info[r * dim + c] += w_curv * xt[r] * xt[c] * gval;
        info[(r + p + 1) * dim + (c + p + 1)] += w_curv * s_bb[r * (p + 1) + c];
      }
    }
  }
}

}  // namespace

double log_likelihood(const ModelParams& params, std::span<const Lifetime> data) {
  detail::check_data(params, data);
  double total = 0.0;
  for (std::size_t idx : detail::id_order(data)) {
    total += lifetime_loglik(params, data[idx]);
  }
  return total;
}

double penalty(const ModelParams& params, const RegularizedLossSpec& spec) {
  double pa = 0.0;
  for (double v : params.alpha) pa += v * v;
  double pb = 0.0;
  for (double v : params.beta) pb += v * v;
  if (spec.penalize_intercepts) {
    pa += params.alpha0 * params.alpha0;
    pb += params.beta0 * params.beta0;
  }
  return spec.c1_alpha * pa + spec.c2_beta * pb;
}

double regularized_loss(const ModelParams& params, std::span<const Lifetime> data,
                        const RegularizedLossSpec& spec) {
  return -log_likelihood(params, data) + penalty(params, spec);
}

std::vector<double> gradient(const ModelParams& params,
                             std::span<const Lifetime> data,
                             const RegularizedLossSpec& spec) {
  detail::check_data(params, data);
  const std::size_t p = params.n_features();
  std::vector<double> grad(2 * p + 2, 0.0);
  for (std::size_t idx : detail::id_order(data)) {
    accumulate_gradient(params, data[idx], grad);
  }
  for (std::size_t k = 0; k < p; ++k) {
    grad[1 + k] += 2.0 * spec.c1_alpha * params.alpha[k];
    grad[2 + p + k] += 2.0 * spec.c2_beta * params.beta[k];
  }
  if (spec.penalize_intercepts) {
    grad[0] += 2.0 * spec.c1_alpha * params.alpha0;
    grad[1 + p] += 2.0 * spec.c2_beta * params.beta0;
  }
  return grad;
}

ObservedInformation observed_information(const ModelParams& params,
                                         std::span<const Lifetime> data) {
  detail::check_data(params, data);
  ObservedInformation out;
  out.dim = params.dim();
  out.matrix.assign(out.dim * out.dim, 0.0);
  for (std::size_t idx : detail::id_order(data)) {
    accumulate_information(params, data[idx], out.matrix);
  }
  return out;
}

}  // namespace lshm
