#include "lshm/hazard.hpp"

#include <cmath>
#include <string>

#include "lshm/errors.hpp"

namespace lshm {

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      throw dimension_error("Matrix::from_rows: ragged rows");
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void Lifetime::validate() const {
  if (length() == 0) {
    throw dimension_error("lifetime '" + id + "' has no steps");
  }
  if (!covariates.all_finite()) {
    throw data_error("lifetime '" + id + "' has non-finite covariates");
  }
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> theta;
  theta.reserve(dim());
  theta.push_back(alpha0);
  theta.insert(theta.end(), alpha.begin(), alpha.end());
  theta.push_back(beta0);
  theta.insert(theta.end(), beta.begin(), beta.end());
  return theta;
}

ModelParams ModelParams::unflatten(std::span<const double> theta) {
  if (theta.size() < 2 || theta.size() % 2 != 0) {
    throw dimension_error("parameter vector must have even length 2P + 2");
  }
  const std::size_t p = theta.size() / 2 - 1;
  ModelParams params;
  params.alpha0 = theta[0];
  params.alpha.assign(theta.begin() + 1, theta.begin() + 1 + p);
  params.beta0 = theta[1 + p];
  params.beta.assign(theta.begin() + 2 + p, theta.end());
  return params;
}

ModelParams ModelParams::zeros(std::size_t n_features) {
  ModelParams params;
  params.alpha.assign(n_features, 0.0);
  params.beta.assign(n_features, 0.0);
  return params;
}

void ModelParams::validate() const {
  if (alpha.size() != beta.size()) {
    throw dimension_error("alpha and beta must have equal length");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = finite(alpha0) && finite(beta0);
  for (double v : alpha) ok = ok && finite(v);
  for (double v : beta) ok = ok && finite(v);
  if (!ok) throw data_error("model parameters must be finite");
}

namespace detail {

double guarded_exp(double exponent) {
  if (!(std::abs(exponent) <= 700.0)) {
    throw numeric_range_error("exponent " + std::to_string(exponent) +
                              " outside the representable range [-700, 700]");
  }
  return std::exp(exponent);
}

double linear_predictor(double intercept, std::span<const double> coeffs,
                        std::span<const double> x_row) {
  double s = intercept;
  for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * x_row[k];
  return s;
}

}  // namespace detail

namespace {

void check_row(const ModelParams& params, std::span<const double> x_row) {
  if (params.alpha.size() != params.beta.size()) {
    throw dimension_error("alpha and beta must have equal length");
  }
  if (x_row.size() != params.alpha.size()) {
    throw dimension_error("covariate row has " + std::to_string(x_row.size()) +
                          " features, parameters expect " +
                          std::to_string(params.alpha.size()));
  }
}

}  // namespace

double g_term(const ModelParams& params, std::span<const double> x_row) {
  check_row(params, x_row);
  return detail::guarded_exp(
      detail::linear_predictor(params.alpha0, params.alpha, x_row));
}

double mu_step(const ModelParams& params, std::span<const double> x_row) {
  check_row(params, x_row);
  return detail::guarded_exp(
      detail::linear_predictor(params.beta0, params.beta, x_row));
}

HazardTrajectory trajectory(const ModelParams& params, const Lifetime& life) {
  life.validate();
  if (life.n_features() != params.alpha.size()) {
    throw dimension_error("lifetime '" + life.id + "' has " +
                          std::to_string(life.n_features()) +
                          " features, parameters expect " +
                          std::to_string(params.alpha.size()));
  }
  const std::size_t t_max = life.length();
  HazardTrajectory traj;
  traj.mu.resize(t_max);
  traj.g.resize(t_max);
  traj.lambda.resize(t_max);
  double mu = 0.0;
  for (std::size_t j = 0; j < t_max; ++j) {
    const auto x = life.covariates.row(j);
    mu += mu_step(params, x);
    traj.mu[j] = mu;
    traj.g[j] = g_term(params, x);
    traj.lambda[j] = traj.mu[j] + traj.g[j];
  }
  return traj;
}

double cumulative_hazard(const HazardTrajectory& traj, std::size_t upto_step) {
  if (upto_step == 0 || upto_step > traj.size()) {
    throw dimension_error("cumulative_hazard: step " +
                          std::to_string(upto_step) +
                          " outside trajectory of length " +
                          std::to_string(traj.size()));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < upto_step; ++j) total += traj.lambda[j];
  return total;
}

}  // namespace lshm
