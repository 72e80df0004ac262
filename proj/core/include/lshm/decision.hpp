#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lshm/types.hpp"

namespace lshm {

// Which per-step series a warning threshold is compared against.
enum class Criterion { TotalHazard, LatentOnly };

// Asymmetric cost of warning xi steps before failure when d steps of lead
// time are wanted: late warnings (xi < d) cost c1 per step short, early
// ones c2 per step over. c1 >= c2 is the sensible regime but is the
// caller's to enforce; see CostSpec::early_preferred.
struct CostSpec {
  std::size_t d = 1;
  double c1 = 1.0;
  double c2 = 1.0;

  bool early_preferred() const { return c1 >= c2; }
  // Throws std::invalid_argument on d == 0 or nonpositive costs.
  void validate() const;
};

struct WarningPolicy {
  Criterion criterion = Criterion::TotalHazard;
  double threshold = 0.0;
  CostSpec cost;
};

// C_d(xi): c1 (d - xi) for xi < d, else c2 (xi - d). Piecewise linear,
// convex, zero exactly at xi = d.
double pinball_cost(const CostSpec& cost, double xi);

// Criterion values of one lifetime under a fitted model; failed records
// whether the lifetime ended in failure.
struct CriterionSeries {
  std::string id;
  std::vector<double> values;
  bool failed = true;
};

CriterionSeries criterion_series(const ModelParams& params, const Lifetime& life,
                                 Criterion criterion);

// First 1-based step whose value reaches threshold, or values.size() when
// none does (the warning falls at the end of observation).
std::size_t first_crossing(std::span<const double> values, double threshold);

// Warning time R for one lifetime: min(T, first step with criterion >=
// policy.threshold).
std::size_t warning_time(const WarningPolicy& policy, const HazardTrajectory& traj,
                         const Lifetime& life);

struct ThresholdFit {
  double threshold = 0.0;  // +inf means "never warn"
  double risk = 0.0;       // mean pinball cost over eligible lifetimes
  std::size_t n_eligible = 0;
};

// Empirical risk minimization over thresholds. The risk is piecewise
// constant in gamma, so scanning the finite candidate set {every observed
// criterion value} + {0, +inf} is exact; ties resolve to the largest
// gamma. Eligible lifetimes are failed ones with T >= cost.d; with
// include_censored, censored lifetimes of length >= cost.d also enter,
// contributing only the early-warning branch c2 * max(0, S - R - d)
// (censoring bounds the unobserved failure time from below).
// Throws data_error when no lifetime is eligible.
ThresholdFit optimize_threshold(std::span<const CriterionSeries> training,
                                const CostSpec& cost, bool include_censored = false);

struct TradeoffPoint {
  double threshold = 0.0;
  double pct_missing_operating_time = 0.0;  // sum(T - R) / sum(T) * 100
  double pct_unexpected_failures = 0.0;     // failed with R == T, / N * 100
};

// Operating characteristic of threshold warnings over a sweep. Monotone:
// raising the threshold never increases missing operating time and never
// decreases unexpected failures.
std::vector<TradeoffPoint> tradeoff_curve(std::span<const CriterionSeries> fits,
                                          std::span<const double> thresholds);

// Every distinct observed criterion value plus 0 and +inf, ascending.
std::vector<double> default_threshold_sweep(std::span<const CriterionSeries> fits);

}  // namespace lshm
