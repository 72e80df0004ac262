#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lshm/decision.hpp"
#include "lshm/types.hpp"

namespace lshm {

// Cumulative model hazard at the observed failure time of each Failed
// lifetime, in id order. Exact Exp(1) draws when the model matches the
// data-generating hazard; censored lifetimes are skipped.
std::vector<double> cox_snell_residuals(const ModelParams& params,
                                        std::span<const Lifetime> data);

struct KsResult {
  double d = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

// One-sample Kolmogorov-Smirnov against Exp(1): D = sup |F_n - F| and p
// from the Kolmogorov asymptotic series (100 terms) evaluated at
// (sqrt(n) + 0.12 + 0.11/sqrt(n)) D; adequate for n >= 10.
KsResult ks_test_exp1(std::span<const double> residuals);

// Same residuals computed from precomputed total-hazard series (any model
// able to produce a lambda series can be diagnosed this way).
std::vector<double> residuals_from_lambda(std::span<const CriterionSeries> series);

struct RankRecord {
  std::string lifetime_id;
  std::size_t eval_offset;
  double percentile;        // fraction of the cohort strictly below
  std::size_t cohort_size;
};

struct RankReport {
  std::vector<RankRecord> records;
  std::vector<std::string> skipped;  // too short for the offset, or no cohort
};

// How a failed lifetime's criterion ranked among its peers shortly before
// failure: for each Failed lifetime with T > offset, the criterion at step
// T - offset is compared against every other lifetime still observed at
// that age (length >= T), evaluated at the same step. Ties count as not
// lower, so identical values rank 0.
RankReport hazard_rank_percentile(const ModelParams& params,
                                  std::span<const Lifetime> data,
                                  std::span<const std::size_t> offsets,
                                  Criterion criterion = Criterion::TotalHazard);

// Rank computation on precomputed criterion series; series length stands in
// for the observation length.
RankReport rank_from_series(std::span<const CriterionSeries> series,
                            std::span<const std::size_t> offsets);

// 100 |T - (R + d)| / T: percent error of predicting failure d steps after
// the warning.
double rul_prediction_error(std::size_t actual_lifetime, std::size_t warning_step,
                            std::size_t lead_time);
double rul_prediction_error(const ModelParams& params, const WarningPolicy& policy,
                            const Lifetime& life);

// Remaining life after the fraction point: max(1, T - max(1, floor(f T))).
std::size_t lead_time_for_fraction(std::size_t t, double fraction = 0.75);

struct CostRow {
  std::string model;
  double total_cost = 0.0;
  double threshold = 0.0;
  std::size_t n_lifetimes = 0;
};

// Total pinball cost per model over the test criterion series (failed
// lifetimes of length >= d), one trained threshold per model, plus a final
// warn_at_failure benchmark row costing C_d(0) per lifetime. All models
// must describe the same lifetimes.
std::vector<CostRow> cost_comparison(
    std::span<const std::string> names,
    std::span<const std::vector<CriterionSeries>> series_per_model,
    std::span<const double> thresholds, const CostSpec& cost);

}  // namespace lshm
