#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <doctest.h>

#include "lshm/cox.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/rng.hpp"
#include "lshm/types.hpp"

#include "test_util.hpp"

using namespace lshm;
using test_util::approx_rel;
using test_util::make_life;

namespace {

// Local discrete-time sampler for the proportional-hazards law, written
// against the closed-form hazard rather than the library's evaluator.
std::vector<Lifetime> weibull_lifetimes(double zeta, double eta, std::size_t n,
                                        std::uint64_t seed, std::size_t horizon) {
  std::vector<Lifetime> out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_stream(seed, i);
    const double v = rng.uniform01();
    double cum = 0.0;
    std::vector<std::vector<double>> rows;
    bool failed = false;
    for (std::size_t t = 1; t <= horizon; ++t) {
      rows.push_back({rng.normal()});  // unrelated covariate
      cum += (zeta / eta) * std::pow(static_cast<double>(t) / eta, zeta - 1.0);
      if (std::exp(-cum) <= v) {
        failed = true;
        break;
      }
    }
    out.push_back(make_life("w-" + std::to_string(i),
                            failed ? Event::Failed : Event::Censored, rows));
  }
  return out;
}

}  // namespace

TEST_CASE("proportional-hazards baseline matches its closed form") {
  CoxParams flat;
  CHECK(cox_hazard(flat, 1, {}) == 1.0);
  CHECK(cox_hazard(flat, 9, {}) == 1.0);

  CoxParams rising;
  rising.zeta = 2.0;
  rising.eta = 1.0;
  CHECK(cox_hazard(rising, 3, {}) == 6.0);

  CoxParams study;
  study.zeta = 20.0;
  study.eta = 4.5;
  study.coeffs = {1.4};
  const std::vector<double> x{1.0};
  CHECK(cox_hazard(study, 4, x) == approx_rel(1.9227898904609515, 1e-12));
}

TEST_CASE("baseline parameters are validated") {
  CoxParams zero_shape;
  zero_shape.zeta = 0.0;
  CHECK_THROWS_AS(zero_shape.validate(), std::invalid_argument);

  CoxParams bad_scale;
  bad_scale.eta = -1.0;
  CHECK_THROWS_AS(bad_scale.validate(), std::invalid_argument);

  CoxParams bad_coeff;
  bad_coeff.coeffs = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(bad_coeff.validate(), std::invalid_argument);

  CHECK_NOTHROW(CoxParams{}.validate());
}

TEST_CASE("a shape above one gives a strictly increasing hazard") {
  CoxParams p;
  p.zeta = 1.7;
  p.eta = 12.0;
  double prev = 0.0;
  for (std::size_t t = 1; t <= 10; ++t) {
    const double h = cox_hazard(p, t, {});
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("the hazard series is the per-step closed form over the lifetime") {
  Rng rng(33);
  const auto inst = test_util::random_instance(rng, 2, 1, 8);
  const Lifetime& life = inst.data.front();
  CoxParams p;
  p.zeta = 1.3;
  p.eta = 6.0;
  p.coeffs = {0.2, -0.4};
  const std::vector<double> series = cox_lambda_series(p, life);
  REQUIRE(series.size() == life.length());
  for (std::size_t j = 0; j < series.size(); ++j)
    CHECK(series[j] == cox_hazard(p, j + 1, life.covariates.row(j)));
}

TEST_CASE("baseline loss shares the likelihood and penalizes only the slopes") {
  Rng rng(37);
  const auto inst = test_util::random_instance(rng, 2, 4, 8, true);
  CoxParams p;
  p.zeta = 1.4;
  p.eta = 9.0;
  p.coeffs = {0.3, -0.2};

  RegularizedLossSpec spec;
  spec.c1_alpha = 0.25;

  double manual = 0.0;
  for (const Lifetime& life : inst.data) {
    const std::vector<double> lam = cox_lambda_series(p, life);
    manual -= series::loglik_from_lambda(lam, life.event);
  }
  manual += 0.25 * (0.3 * 0.3 + 0.2 * 0.2);
  CHECK(cox_loss(p, inst.data, spec) == approx_rel(manual, 1e-13));

  RegularizedLossSpec other = spec;
  other.c2_beta = 99.0;  // unused by the baseline
  CHECK(cox_loss(p, inst.data, other) == cox_loss(p, inst.data, spec));
}

TEST_CASE("baseline fit recovers a generating shape and scale") {
  const std::vector<Lifetime> data = weibull_lifetimes(2.0, 50.0, 2000, 71, 300);

  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  FitConfig cfg;
  cfg.max_iters = 3000;
  const CoxFit fit = fit_cox(data, spec, cfg);

  CHECK(fit.converged);
  CHECK(std::abs(fit.params.zeta - 2.0) <= 0.1);
  CHECK(std::abs(fit.params.eta - 50.0) <= 2.0);
  CHECK(std::abs(fit.params.coeffs[0]) <= 0.05);

  double prev = std::numeric_limits<double>::infinity();
  for (const TraceEntry& e : fit.trace) {
    CHECK(e.objective < prev);
    prev = e.objective;
  }
}

TEST_CASE("baseline fit can choose a decreasing hazard") {
  const std::vector<Lifetime> data = weibull_lifetimes(0.5, 10.0, 400, 73, 200);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  FitConfig cfg;
  cfg.max_iters = 2000;
  const CoxFit fit = fit_cox(data, spec, cfg);
  CHECK(fit.converged);
  CHECK(fit.params.zeta < 1.0);
}

TEST_CASE("baseline fitting is deterministic") {
  const std::vector<Lifetime> data = weibull_lifetimes(1.5, 20.0, 60, 79, 150);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  FitConfig cfg;
  cfg.max_iters = 1500;
  const CoxFit a = fit_cox(data, spec, cfg);
  const CoxFit b = fit_cox(data, spec, cfg);
  CHECK(a.params.zeta == b.params.zeta);
  CHECK(a.params.eta == b.params.eta);
  CHECK(a.params.coeffs == b.params.coeffs);
  CHECK(a.loss == b.loss);
}
