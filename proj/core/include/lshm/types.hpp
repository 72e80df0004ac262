#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lshm/errors.hpp"

namespace lshm {

// Dense row-major matrix, just large enough for covariate histories.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Event { Failed, Censored };

// One observed lifetime on a unit-step grid. Step j (1-based, j = 1..T) has
// covariate row covariates.row(j - 1). A Failed lifetime failed during step
// T; a Censored one was last seen surviving step T.
struct Lifetime {
  std::string id;    // unique lifetime identifier, the deterministic sort key
  std::string unit;  // physical unit the lifetime was observed on
  Matrix covariates; // T x P
  Event event = Event::Failed;

  std::size_t length() const { return covariates.rows(); }
  std::size_t n_features() const { return covariates.cols(); }

  // Throws dimension_error on an empty history, data_error on non-finite values.
  void validate() const;
};

// Parameters of the additive hazard: transient term exp(alpha0 + alpha.x),
// latent accumulation increments exp(beta0 + beta.x). alpha and beta must
// have equal length P. Flattened order: (alpha0, alpha, beta0, beta).
struct ModelParams {
  double alpha0 = 0.0;
  std::vector<double> alpha;
  double beta0 = 0.0;
  std::vector<double> beta;

  std::size_t n_features() const { return alpha.size(); }
  std::size_t dim() const { return 2 * alpha.size() + 2; }

  std::vector<double> flatten() const;
  static ModelParams unflatten(std::span<const double> theta);
  static ModelParams zeros(std::size_t n_features);

  // Throws dimension_error when alpha and beta disagree, data_error on
  // non-finite entries.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Per-step hazard decomposition over one lifetime: index j - 1 holds the
// values for step j. mu is nondecreasing by construction, lambda = mu + g.
struct HazardTrajectory {
  std::vector<double> mu;
  std::vector<double> g;
  std::vector<double> lambda;

  std::size_t size() const { return lambda.size(); }
};

}  // namespace lshm
