#include "lshm/decision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"

namespace lshm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_series(std::span<const CriterionSeries> series) {
  if (series.empty()) throw data_error("no criterion series given");
  for (const CriterionSeries& s : series) {
    if (s.values.empty()) {
      throw dimension_error("criterion series '" + s.id + "' is empty");
    }
  }
}

}  // namespace

void CostSpec::validate() const {
  if (d == 0) throw std::invalid_argument("lead time d must be at least 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw std::invalid_argument("cost rates c1 and c2 must be positive");
  }
}

double pinball_cost(const CostSpec& cost, double xi) {
  cost.validate();
  if (!(xi >= 0.0)) throw std::invalid_argument("xi must be nonnegative");
  const double d = static_cast<double>(cost.d);
  return xi < d ? cost.c1 * (d - xi) : cost.c2 * (xi - d);
}

CriterionSeries criterion_series(const ModelParams& params, const Lifetime& life,
                                 Criterion criterion) {
  HazardTrajectory traj = trajectory(params, life);
  CriterionSeries out;
  out.id = life.id;
  out.failed = life.event == Event::Failed;
  out.values = criterion == Criterion::LatentOnly ? std::move(traj.mu)
                                                  : std::move(traj.lambda);
  return out;
}

std::size_t first_crossing(std::span<const double> values, double threshold) {
  if (values.empty()) throw dimension_error("empty criterion series");
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] >= threshold) return j + 1;
  }
  return values.size();
}

std::size_t warning_time(const WarningPolicy& policy, const HazardTrajectory& traj,
                         const Lifetime& life) {
  if (traj.size() != life.length()) {
    throw dimension_error("trajectory does not match lifetime '" + life.id + "'");
  }
  const std::vector<double>& values =
      policy.criterion == Criterion::LatentOnly ? traj.mu : traj.lambda;
  return first_crossing(values, policy.threshold);
}

ThresholdFit optimize_threshold(std::span<const CriterionSeries> training,
                                const CostSpec& cost, bool include_censored) {
  cost.validate();
  check_series(training);

  // Eligible lifetimes and their running-max series; R(gamma) is then the
  // first index where the nondecreasing running max reaches gamma.
  struct Eligible {
    std::vector<double> prefix_max;
    bool failed;
  };
  std::vector<Eligible> eligible;
  for (const CriterionSeries& s : training) {
    if (s.values.size() < cost.d) continue;
    if (!s.failed && !include_censored) continue;
    Eligible e;
    e.failed = s.failed;
    e.prefix_max.resize(s.values.size());
    double running = -kInf;
    for (std::size_t j = 0; j < s.values.size(); ++j) {
      running = std::max(running, s.values[j]);
      e.prefix_max[j] = running;
    }
    eligible.push_back(std::move(e));
  }
  if (eligible.empty()) {
    throw data_error("no lifetime is eligible for threshold training (need "
                     "length >= d, failed unless include_censored)");
  }

  std::vector<double> candidates;
  for (const CriterionSeries& s : training) {
    candidates.insert(candidates.end(), s.values.begin(), s.values.end());
  }
  candidates.push_back(0.0);
  candidates.push_back(kInf);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const double d = static_cast<double>(cost.d);
  auto risk_at = [&](double gamma) {
    double total = 0.0;
    for (const Eligible& e : eligible) {
      const std::size_t t_end = e.prefix_max.size();
      const auto it = std::lower_bound(e.prefix_max.begin(), e.prefix_max.end(), gamma);
      const std::size_t r =
          it == e.prefix_max.end()
              ? t_end
              : static_cast<std::size_t>(it - e.prefix_max.begin()) + 1;
      const double xi = static_cast<double>(t_end - r);
      if (e.failed) {
        total += xi < d ? cost.c1 * (d - xi) : cost.c2 * (xi - d);
      } else {
        total += xi > d ? cost.c2 * (xi - d) : 0.0;
      }
    }
    return total / static_cast<double>(eligible.size());
  };

  // Scan descending so equal risks resolve to the largest threshold.
  ThresholdFit best;
  best.threshold = kInf;
  best.risk = kInf;
  best.n_eligible = eligible.size();
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    const double risk = risk_at(*it);
    if (risk < best.risk) {
      best.risk = risk;
      best.threshold = *it;
    }
  }
  return best;
}

std::vector<TradeoffPoint> tradeoff_curve(std::span<const CriterionSeries> fits,
                                          std::span<const double> thresholds) {
  check_series(fits);
  double total_time = 0.0;
  for (const CriterionSeries& s : fits) {
    total_time += static_cast<double>(s.values.size());
  }
  const double n = static_cast<double>(fits.size());

  std::vector<TradeoffPoint> curve;
  curve.reserve(thresholds.size());
  for (double gamma : thresholds) {
    double missing = 0.0;
    double unexpected = 0.0;
    for (const CriterionSeries& s : fits) {
      const std::size_t r = first_crossing(s.values, gamma);
      missing += static_cast<double>(s.values.size() - r);
      if (s.failed && r == s.values.size()) unexpected += 1.0;
    }
    curve.push_back({gamma, 100.0 * missing / total_time, 100.0 * unexpected / n});
  }
  return curve;
}

std::vector<double> default_threshold_sweep(std::span<const CriterionSeries> fits) {
  check_series(fits);
  std::vector<double> sweep;
  for (const CriterionSeries& s : fits) {
    sweep.insert(sweep.end(), s.values.begin(), s.values.end());
  }
  sweep.push_back(0.0);
  sweep.push_back(kInf);
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  return sweep;
}

}  // namespace lshm
