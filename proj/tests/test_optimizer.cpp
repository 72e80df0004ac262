#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <doctest.h>

#include "lshm/errors.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/optimizer.hpp"
#include "lshm/rng.hpp"
#include "lshm/simulator.hpp"
#include "lshm/types.hpp"

#include "test_util.hpp"

using namespace lshm;
using test_util::approx_rel;
using test_util::const_life;
using test_util::recovery_truth;

namespace {

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_strictly_decreasing(const std::vector<TraceEntry>& trace, double start) {
  double prev = start;
  for (const TraceEntry& e : trace) {
    CHECK(e.objective < prev);
    prev = e.objective;
  }
}

// Separable quadratic: exact line search must solve each coordinate in one
// move, so coordinate descent finishes in about dim iterations.
class QuadraticProblem : public CoordinateProblem {
 public:
  QuadraticProblem(std::vector<double> target, std::vector<double> weight)
      : target_(std::move(target)), weight_(std::move(weight)), x_(target_.size(), 0.0) {}

  std::size_t dim() const override { return target_.size(); }
  double set_point(std::span<const double> theta) override {
    x_.assign(theta.begin(), theta.end());
    return value(x_);
  }
  std::vector<double> gradient() const override {
    std::vector<double> g(x_.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = 2.0 * weight_[i] * (x_[i] - target_[i]);
    return g;
  }
  double objective_with_move(std::size_t c, double delta) const override {
    std::vector<double> y = x_;
    y[c] += delta;
    return value(y);
  }

 private:
  double value(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += weight_[i] * (v[i] - target_[i]) * (v[i] - target_[i]);
    return s;
  }

  std::vector<double> target_, weight_, x_;
};

}  // namespace

TEST_CASE("line search finds the minimum of a shifted parabola") {
  const auto f = [](double x) { return (x - 2.0) * (x - 2.0); };
  const LineSearchResult ls = line_search_1d(f, 1e-8);
  CHECK_FALSE(ls.bracket_failed);
  CHECK(ls.step == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(ls.value == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("line search stays put when the direction only rises") {
  const auto f = [](double x) { return std::exp(x) - x; };
  const LineSearchResult ls = line_search_1d(f, 1e-8);
  CHECK_FALSE(ls.bracket_failed);
  CHECK(ls.step == 0.0);
  CHECK(ls.value == 1.0);
}

TEST_CASE("line search agrees with a dense grid on convex quartics") {
  for (double m : {0.7, 3.3, 17.9}) {
    const auto f = [m](double x) {
      const double u = x - m;
      return u * u * u * u + 0.5 * u * u + 1.0;
    };
    const LineSearchResult ls = line_search_1d(f, 1e-8);

    double grid_best = 0.0, grid_val = f(0.0);
    for (double x = 0.0; x <= 40.0; x += 5e-4) {
      if (f(x) < grid_val) {
        grid_val = f(x);
        grid_best = x;
      }
    }
    CHECK(std::abs(ls.step - grid_best) <= 1e-3);
    CHECK(ls.step == doctest::Approx(m).epsilon(1e-6));
    CHECK(ls.value <= grid_val + 1e-12);
  }
}

TEST_CASE("a direction that improves forever reports a bracketing failure") {
  const auto f = [](double x) { return -x; };
  const LineSearchResult ls = line_search_1d(f, 1e-8);
  CHECK(ls.bracket_failed);
  CHECK(ls.step == 0.0);
}

TEST_CASE("line search escapes a wide flat shelf to reach a far dip") {
  // Flat at f(0) out to 1e6, then a parabolic dip bottoming at 2e6.
  const auto f = [](double x) {
    if (x <= 1e6) return 1.0;
    const double u = x - 2e6;
    return 1.0 + (u * u - 1e12) / 1e13;
  };
  const LineSearchResult ls = detail::line_search_from(f, 1.0, 1e-8);
  CHECK_FALSE(ls.bracket_failed);
  CHECK(ls.step == doctest::Approx(2e6).epsilon(1e-3));
  CHECK(ls.value == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("a shelf wider than the probe cap is declared flat") {
  const auto f = [](double x) { return x <= 1e12 ? 1.0 : 0.0; };
  const LineSearchResult ls = detail::line_search_from(f, 1.0, 1e-8, 1e6);
  CHECK_FALSE(ls.bracket_failed);
  CHECK(ls.step == 0.0);
  CHECK(ls.value == 1.0);
}

TEST_CASE("coordinate descent solves a separable quadratic exactly") {
  QuadraticProblem problem({3.0, -1.5, 0.25, 7.0}, {1.0, 4.0, 0.5, 2.0});
  const std::vector<double> start(4, 0.0);
  const CdResult res = minimize_coordinate_descent(problem, start, 1e-10, 100, 1e-10);
  CHECK(res.converged);
  CHECK(res.iterations <= 8);
  const std::vector<double> target{3.0, -1.5, 0.25, 7.0};
  for (std::size_t i = 0; i < target.size(); ++i)
    CHECK(res.x[i] == doctest::Approx(target[i]).epsilon(1e-6));
  CHECK(res.value == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("coordinate descent and the reference optimizer find the same optimum") {
  Rng rng(101);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;
  spec.penalize_intercepts = true;  // coercive in every direction: unique optimum
  for (int rep = 0; rep < 6; ++rep) {
    const auto inst = test_util::random_instance(rng, 2, 5, 8, true);

    FitConfig cd_cfg;
    cd_cfg.epsilon = 1e-10;
    cd_cfg.max_iters = 50000;
    const FittedModel cd = fit_coordinate_descent(inst.data, spec, cd_cfg);

    FitConfig gd_cfg;
    gd_cfg.epsilon = 1e-12;
    gd_cfg.max_iters = 500000;
    const FittedModel gd = fit_reference(inst.data, spec, gd_cfg);

    CHECK(std::abs(cd.loss - gd.loss) <= 1e-4);
    const std::vector<double> a = cd.params.flatten();
    const std::vector<double> b = gd.params.flatten();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-3);

    const double start = regularized_loss(ModelParams::zeros(inst.params.n_features()),
                                          inst.data, spec);
    check_strictly_decreasing(cd.trace, start);
    check_strictly_decreasing(gd.trace, start);
  }
}

TEST_CASE("single-lifetime fit reaches a stationary point matching the reference") {
  const std::vector<Lifetime> data{const_life("a", Event::Failed, 6, {0.0})};
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;

  FitConfig cfg;
  cfg.max_iters = 4000;
  const FittedModel cd = fit_coordinate_descent(data, spec, cfg);
  const std::vector<double> g = gradient(cd.params, data, spec);
  CHECK(inf_norm(g) <= 1e-6);

  FitConfig gd_cfg;
  gd_cfg.max_iters = 200000;
  const FittedModel gd = fit_reference(data, spec, gd_cfg);
  CHECK(std::abs(cd.loss - gd.loss) <= 1e-4);
}

TEST_CASE("refitting from a fitted point stops immediately") {
  Rng rng(107);
  const auto inst = test_util::random_instance(rng, 2, 5, 8, true);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;
  spec.penalize_intercepts = true;
  FitConfig cfg;
  cfg.max_iters = 50000;
  const FittedModel fit = fit_coordinate_descent(inst.data, spec, cfg);
  REQUIRE(fit.converged);

  FitConfig again = cfg;
  again.init = fit.params;
  const FittedModel refit = fit_coordinate_descent(inst.data, spec, again);
  CHECK(refit.converged);
  CHECK(refit.iterations <= 2);
  CHECK(std::abs(refit.loss - fit.loss) <= 2.0 * cfg.epsilon);
}

TEST_CASE("fitting is deterministic down to the trace") {
  Rng rng(113);
  const auto inst = test_util::random_instance(rng, 2, 4, 8, true);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.05;
  spec.c2_beta = 0.05;
  FitConfig cfg;
  cfg.max_iters = 2000;
  const FittedModel a = fit_coordinate_descent(inst.data, spec, cfg);
  const FittedModel b = fit_coordinate_descent(inst.data, spec, cfg);
  CHECK(a.params == b.params);
  CHECK(a.loss == b.loss);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].coordinate == b.trace[i].coordinate);
    CHECK(a.trace[i].step == b.trace[i].step);
    CHECK(a.trace[i].objective == b.trace[i].objective);
  }
}

TEST_CASE("the iteration cap is honored and reported as non-convergence") {
  Rng rng(127);
  const auto inst = test_util::random_instance(rng, 2, 5, 8, true);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;
  FitConfig cfg;
  cfg.max_iters = 1;
  const FittedModel fit = fit_coordinate_descent(inst.data, spec, cfg);
  CHECK(fit.iterations == 1);
  CHECK_FALSE(fit.converged);
  CHECK(fit.trace.size() == 1);
}

TEST_CASE("an unset iteration cap resolves to fifty sweeps per coordinate") {
  CHECK(detail::resolve_max_iters(0, 4) == 200);
  CHECK(detail::resolve_max_iters(0, 10) == 500);
  CHECK(detail::resolve_max_iters(7, 4) == 7);
}

TEST_CASE("scale-matched initialization splits the failure mass between the terms") {
  const std::vector<Lifetime> data{const_life("a", Event::Failed, 3, {0.0, 0.0}),
                                   const_life("b", Event::Censored, 4, {0.0, 0.0})};
  const ModelParams p = moment_init(data);
  // one failure over 7 observed steps and 16 latent weight units
  CHECK(p.alpha0 == approx_rel(std::log(1.0 / 14.0), 1e-15));
  CHECK(p.beta0 == approx_rel(std::log(1.0 / 32.0), 1e-15));
  CHECK(p.alpha == std::vector<double>{0.0, 0.0});
  CHECK(p.beta == std::vector<double>{0.0, 0.0});

  const std::vector<Lifetime> censored{const_life("c", Event::Censored, 5, {0.0})};
  const ModelParams q = moment_init(censored);
  CHECK(q.alpha0 == approx_rel(std::log(0.5 / 10.0), 1e-15));

  const std::vector<Lifetime> empty;
  CHECK_THROWS_AS(moment_init(empty), data_error);
}

TEST_CASE("a large simulated cohort recovers its generating parameters") {
  SimConfig sim;
  sim.true_params = recovery_truth();
  sim.n_lifetimes = 800;
  sim.seed = 4242;
  const std::vector<Lifetime> data = simulate_dataset(sim);

  RegularizedLossSpec spec;  // C1 = C2 = 0
  FitConfig cfg;
  cfg.max_iters = 4000;
  cfg.init = moment_init(data);
  const FittedModel fit = fit_coordinate_descent(data, spec, cfg);

  CHECK(fit.converged);
  CHECK(std::abs(fit.params.beta0 - (-7.0)) <= 0.27);
  CHECK(std::abs(fit.params.alpha0 - (-14.0)) <= 1.98);
  CHECK(std::abs(fit.params.beta[0] - 0.5) <= 0.57);
  CHECK(std::abs(fit.params.alpha[0] - 5.0) <= 0.69);

  const double start = regularized_loss(*cfg.init, data, spec);
  check_strictly_decreasing(fit.trace, start);
}
