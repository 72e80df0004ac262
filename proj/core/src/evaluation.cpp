#include "lshm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"
#include "lshm/likelihood.hpp"

namespace lshm {

namespace {

std::vector<std::size_t> series_id_order(std::span<const CriterionSeries> series) {
  std::vector<std::size_t> order(series.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return series[a].id < series[b].id;
  });
  return order;
}

}  // namespace

std::vector<double> residuals_from_lambda(std::span<const CriterionSeries> series) {
  std::vector<double> residuals;
  for (std::size_t idx : series_id_order(series)) {
    const CriterionSeries& s = series[idx];
    if (!s.failed) continue;
    if (s.values.empty()) throw data_error("empty hazard series for '" + s.id + "'");
    double cum = 0.0;
    for (double v : s.values) cum += v;
    residuals.push_back(cum);
  }
  return residuals;
}

std::vector<double> cox_snell_residuals(const ModelParams& params,
                                        std::span<const Lifetime> data) {
  detail::check_data(params, data);
  std::vector<CriterionSeries> series;
  series.reserve(data.size());
  for (const Lifetime& life : data) {
    series.push_back(criterion_series(params, life, Criterion::TotalHazard));
  }
  return residuals_from_lambda(series);
}

KsResult ks_test_exp1(std::span<const double> residuals) {
  if (residuals.empty()) throw data_error("no residuals to test");
  std::vector<double> r(residuals.begin(), residuals.end());
  for (double v : r) {
    if (!(v >= 0.0)) throw data_error("residuals must be nonnegative");
  }
  std::sort(r.begin(), r.end());

  const std::size_t n = r.size();
  const double dn = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = -std::expm1(-r[i]);  // 1 - exp(-r), Exp(1) CDF
    d = std::max(d, f - static_cast<double>(i) / dn);
    d = std::max(d, static_cast<double>(i + 1) / dn - f);
  }

  const double t = (std::sqrt(dn) + 0.12 + 0.11 / std::sqrt(dn)) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
  }
  const double p = std::clamp(2.0 * sum, 0.0, 1.0);
  return {d, p, n};
}

RankReport rank_from_series(std::span<const CriterionSeries> series,
                            std::span<const std::size_t> offsets) {
  const std::vector<std::size_t> order = series_id_order(series);

  RankReport report;
  for (std::size_t o : offsets) {
    for (std::size_t idx : order) {
      const CriterionSeries& own_series = series[idx];
      if (!own_series.failed) continue;
      const std::size_t t_end = own_series.values.size();
      if (t_end <= o) {
        report.skipped.push_back(own_series.id);
        continue;
      }
      const std::size_t step = t_end - o;  // 1-based evaluation step
      const double own = own_series.values[step - 1];
      std::size_t cohort = 0;
      std::size_t below = 0;
      for (std::size_t jdx : order) {
        if (jdx == idx || series[jdx].values.size() < t_end) continue;
        ++cohort;
        if (series[jdx].values[step - 1] < own) ++below;
      }
      if (cohort == 0) {
        report.skipped.push_back(own_series.id);
        continue;
      }
      report.records.push_back({own_series.id, o,
                                static_cast<double>(below) / static_cast<double>(cohort),
                                cohort});
    }
  }
  return report;
}

RankReport hazard_rank_percentile(const ModelParams& params,
                                  std::span<const Lifetime> data,
                                  std::span<const std::size_t> offsets,
                                  Criterion criterion) {
  detail::check_data(params, data);
  std::vector<CriterionSeries> series;
  series.reserve(data.size());
  for (const Lifetime& life : data) {
    series.push_back(criterion_series(params, life, criterion));
  }
  return rank_from_series(series, offsets);
}

double rul_prediction_error(std::size_t actual_lifetime, std::size_t warning_step,
                            std::size_t lead_time) {
  if (actual_lifetime == 0) throw std::invalid_argument("lifetime must be >= 1");
  const double t = static_cast<double>(actual_lifetime);
  const double predicted = static_cast<double>(warning_step + lead_time);
  return 100.0 * std::abs(t - predicted) / t;
}

double rul_prediction_error(const ModelParams& params, const WarningPolicy& policy,
                            const Lifetime& life) {
  const HazardTrajectory traj = trajectory(params, life);
  const std::size_t r = warning_time(policy, traj, life);
  return rul_prediction_error(life.length(), r, policy.cost.d);
}

std::size_t lead_time_for_fraction(std::size_t t, double fraction) {
  if (t == 0) throw std::invalid_argument("lifetime must be >= 1");
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1)");
  }
  const std::size_t at = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(t))));
  return std::max<std::size_t>(1, t - at);
}

std::vector<CostRow> cost_comparison(
    std::span<const std::string> names,
    std::span<const std::vector<CriterionSeries>> series_per_model,
    std::span<const double> thresholds, const CostSpec& cost) {
  cost.validate();
  if (names.size() != series_per_model.size() || names.size() != thresholds.size()) {
    throw dimension_error("names, series, and thresholds must align");
  }
  if (names.empty()) throw data_error("no models to compare");
  const std::vector<CriterionSeries>& base = series_per_model[0];
  if (base.empty()) throw data_error("no test lifetimes");
  for (const auto& series : series_per_model) {
    if (series.size() != base.size()) {
      throw dimension_error("models describe different numbers of lifetimes");
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (series[i].id != base[i].id || series[i].failed != base[i].failed ||
          series[i].values.size() != base[i].values.size()) {
        throw dimension_error("models describe different lifetimes");
      }
    }
  }

  std::vector<CostRow> rows;
  for (std::size_t m = 0; m < names.size(); ++m) {
    CostRow row{names[m], 0.0, thresholds[m], 0};
    for (const CriterionSeries& s : series_per_model[m]) {
      if (!s.failed || s.values.size() < cost.d) continue;
      const std::size_t r = first_crossing(s.values, thresholds[m]);
      row.total_cost +=
          pinball_cost(cost, static_cast<double>(s.values.size() - r));
      ++row.n_lifetimes;
    }
    rows.push_back(std::move(row));
  }

  CostRow bench{"warn_at_failure", 0.0, 0.0, 0};
  for (const CriterionSeries& s : base) {
    if (!s.failed || s.values.size() < cost.d) continue;
    bench.total_cost += pinball_cost(cost, 0.0);
    ++bench.n_lifetimes;
  }
  rows.push_back(std::move(bench));
  return rows;
}

}  // namespace lshm
