#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lshm/likelihood.hpp"
#include "lshm/types.hpp"

namespace lshm {

struct FitConfig {
  double epsilon = 1e-8;             // stop when |W(k+1) - W(k)| < epsilon
  std::size_t max_iters = 0;         // 0 resolves to 50 * (2P + 2)
  std::optional<ModelParams> init;   // starting point, all zeros when absent
  double line_search_tol = 1e-8;
};

struct TraceEntry {
  std::size_t coordinate = 0;  // flattened index; == dim for full-gradient moves
  double step = 0.0;           // accepted step length along -grad
  double objective = 0.0;      // objective after the move
};

struct FittedModel {
  ModelParams params;
  double loss = 0.0;
  std::size_t iterations = 0;
  std::vector<TraceEntry> trace;
  bool converged = false;
  bool line_search_warning = false;  // a bracketing failure was hit and skipped
  RegularizedLossSpec spec;
  ObservedInformation information;  // at the returned params, penalty excluded
};

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  bool bracket_failed = false;
};

// Exact minimization of a unimodal objective over x >= 0: starting from
// step 1, halve until the objective improves on f(0) (returning step 0 when
// no step down to tol does), double while it keeps improving, then golden-
// section the bracket down to tol. Objectives may signal an infeasible x by
// returning +inf. A direction that still improves after 200 doublings
// reports step 0 with bracket_failed set.
LineSearchResult line_search_1d(const std::function<double(double)>& objective,
                                double tol);

// Single-coordinate view of a smooth objective, the seam between the
// coordinate-descent engine and a concrete model. set_point rebuilds
// whatever caches make gradient() and objective_with_move cheap.
class CoordinateProblem {
 public:
  virtual ~CoordinateProblem() = default;
  virtual std::size_t dim() const = 0;
  // Moves the current point and returns the objective there. May throw
  // numeric_range_error for infeasible points.
  virtual double set_point(std::span<const double> theta) = 0;
  virtual std::vector<double> gradient() const = 0;
  // Objective after adding delta to one coordinate of the current point,
  // without moving it.
  virtual double objective_with_move(std::size_t coordinate, double delta) const = 0;
};

struct CdResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::vector<TraceEntry> trace;
  bool converged = false;
  bool line_search_warning = false;
};

// Greedy coordinate descent: each iteration picks the coordinate with the
// largest |gradient| (ties to the lowest index), line-searches along its
// negative gradient, and accepts only strict objective decreases. A
// coordinate whose 1-D minimizer is the current point is skipped in favor
// of the next largest; when no coordinate makes progress the point is
// stationary and the run reports convergence. Deterministic throughout.
CdResult minimize_coordinate_descent(CoordinateProblem& problem,
                                     std::span<const double> start,
                                     double epsilon, std::size_t max_iters,
                                     double line_search_tol);

// Value/gradient pair for the reference path and for test surrogates.
struct Objective {
  std::function<double(std::span<const double>)> value;
  std::function<std::vector<double>(std::span<const double>)> gradient;
};

struct DescentResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;
};

// Full-gradient descent with Armijo backtracking; the independent slow path
// the coordinate-descent fit is checked against.
DescentResult minimize_gradient_descent(const Objective& objective,
                                        std::vector<double> start,
                                        double epsilon, std::size_t max_iters);

// Fits the latent hazard model by minimizing the regularized loss with
// greedy coordinate descent from cfg.init (zeros by default). Throws
// numeric_range_error when the starting point itself is infeasible.
FittedModel fit_coordinate_descent(std::span<const Lifetime> data,
                                   const RegularizedLossSpec& spec,
                                   const FitConfig& cfg);

// Scale-matched starting point: intercepts set so each hazard component
// alone would carry half the observed failure count, coefficients zero.
// From all-zero parameters both components over-predict by orders of
// magnitude and the first exact line search can park an intercept on an
// underflow plateau where that component is numerically dead; starting at
// the data's own scale avoids that basin entirely.
ModelParams moment_init(std::span<const Lifetime> data);

// Same loss, full-gradient reference optimizer. Trace entries carry
// coordinate == dim.
FittedModel fit_reference(std::span<const Lifetime> data,
                          const RegularizedLossSpec& spec,
                          const FitConfig& cfg);

namespace detail {

// line_search_1d with f(0) already known. max_probe bounds how far the
// doubling may expand a section that is flat at double resolution before
// the direction is declared genuinely flat.
LineSearchResult line_search_from(const std::function<double(double)>& objective,
                                  double f0, double tol, double max_probe = 0x1p48);

std::size_t resolve_max_iters(std::size_t configured, std::size_t dim);

}  // namespace detail

}  // namespace lshm
