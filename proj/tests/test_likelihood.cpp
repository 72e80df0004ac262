#include <cmath>
#include <vector>

#include <doctest.h>

#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/optimizer.hpp"
#include "lshm/rng.hpp"
#include "lshm/types.hpp"

#include "test_util.hpp"

using namespace lshm;
using test_util::approx_rel;
using test_util::const_life;

namespace {

// Parameters whose hazard over x == 0 is lambda(j) = j * rate + epsilon with
// a vanishing transient term: the latent increment carries everything.
ModelParams latent_only(double rate) {
  ModelParams p;
  p.alpha0 = -400.0;  // exp(-400) ~ 1e-174, drowned by rate at double precision
  p.alpha = {0.0};
  p.beta0 = std::log(rate);
  p.beta = {0.0};
  return p;
}

// Constant hazard lambda(j) = level via the memoryless term.
ModelParams transient_only(double level) {
  ModelParams p;
  p.alpha0 = std::log(level);
  p.alpha = {0.0};
  p.beta0 = -400.0;
  p.beta = {0.0};
  return p;
}

}  // namespace

TEST_CASE("failed lifetime log-likelihood matches the closed form") {
  // lambda = [0.1, 0.2]: survive step 1, fail during step 2.
  const std::vector<Lifetime> data{const_life("a", Event::Failed, 2, {0.0})};
  const double ll = log_likelihood(latent_only(0.1), data);
  CHECK(ll == approx_rel(-0.1 + std::log1p(-std::exp(-0.2)), 1e-13));
  CHECK(ll == approx_rel(-1.80777180097052, 1e-12));
}

TEST_CASE("censored lifetime log-likelihood is the negative cumulative hazard") {
  const std::vector<Lifetime> data{const_life("a", Event::Censored, 3, {0.0})};
  const double ll = log_likelihood(transient_only(0.1), data);
  CHECK(ll == approx_rel(-0.3, 1e-13));
}

TEST_CASE("log-likelihood is additive over lifetimes") {
  const std::vector<Lifetime> one{const_life("a", Event::Failed, 4, {0.0})};
  const std::vector<Lifetime> two{const_life("a", Event::Failed, 4, {0.0}),
                                  const_life("b", Event::Failed, 4, {0.0})};
  const ModelParams p = latent_only(0.07);
  CHECK(log_likelihood(p, two) == approx_rel(2.0 * log_likelihood(p, one), 1e-14));
}

TEST_CASE("summation order is fixed by id, not input order") {
  Rng rng(5);
  auto inst = test_util::random_instance(rng, 2, 5, 8, true);
  const double before = log_likelihood(inst.params, inst.data);
  std::reverse(inst.data.begin(), inst.data.end());
  CHECK(log_likelihood(inst.params, inst.data) == before);
}

TEST_CASE("penalty is the weighted squared norm of the slopes") {
  ModelParams p;
  p.alpha0 = 2.0;
  p.alpha = {1.0, 2.0};
  p.beta0 = 1.0;
  p.beta = {0.0, 0.0};

  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.3;
  CHECK(penalty(p, spec) == 0.5);

  spec.penalize_intercepts = true;
  // adds 0.1 * 2^2 + 0.3 * 1^2
  CHECK(penalty(p, spec) == approx_rel(0.5 + 0.4 + 0.3, 1e-15));
}

TEST_CASE("regularized loss is negative log-likelihood plus penalty") {
  Rng rng(9);
  const auto inst = test_util::random_instance(rng, 2, 4, 8, true);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.2;
  spec.c2_beta = 0.05;
  const double w = regularized_loss(inst.params, inst.data, spec);
  CHECK(w == approx_rel(-log_likelihood(inst.params, inst.data) +
                            penalty(inst.params, spec),
                        1e-14));

  const RegularizedLossSpec none;
  CHECK(regularized_loss(inst.params, inst.data, none) ==
        -log_likelihood(inst.params, inst.data));
}

TEST_CASE("regularized loss is midpoint-convex in the parameters") {
  Rng rng(13);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;
  for (int rep = 0; rep < 5; ++rep) {
    const auto inst = test_util::random_instance(rng, 2, 4, 8, true);
    ModelParams b = inst.params;
    b.alpha0 += test_util::uniform_in(rng, -1.0, 1.0);
    b.beta0 += test_util::uniform_in(rng, -1.0, 1.0);
    for (std::size_t k = 0; k < b.alpha.size(); ++k) {
      b.alpha[k] += test_util::uniform_in(rng, -0.5, 0.5);
      b.beta[k] += test_util::uniform_in(rng, -0.5, 0.5);
    }
    ModelParams mid = inst.params;
    mid.alpha0 = 0.5 * (inst.params.alpha0 + b.alpha0);
    mid.beta0 = 0.5 * (inst.params.beta0 + b.beta0);
    for (std::size_t k = 0; k < mid.alpha.size(); ++k) {
      mid.alpha[k] = 0.5 * (inst.params.alpha[k] + b.alpha[k]);
      mid.beta[k] = 0.5 * (inst.params.beta[k] + b.beta[k]);
    }
    const double wa = regularized_loss(inst.params, inst.data, spec);
    const double wb = regularized_loss(b, inst.data, spec);
    const double wm = regularized_loss(mid, inst.data, spec);
    CHECK(wm < 0.5 * (wa + wb));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const auto inst = test_util::random_instance(rng, 3, 5, 10, rep % 2 == 0);
    RegularizedLossSpec spec;
    spec.c1_alpha = 0.07;
    spec.c2_beta = 0.13;
    spec.penalize_intercepts = rep % 3 == 0;
    const std::vector<double> g = gradient(inst.params, inst.data, spec);
    const std::vector<double> fd = test_util::fd_gradient(inst.params, inst.data, spec);
    REQUIRE(g.size() == fd.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double tol =
          1e-6 * std::max({1.0, std::abs(g[i]), std::abs(fd[i])});
      CHECK(std::abs(g[i] - fd[i]) <= tol);
    }
  }
}

TEST_CASE("slope gradients vanish exactly on all-zero covariates") {
  const std::vector<Lifetime> data{const_life("a", Event::Failed, 5, {0.0, 0.0}),
                                   const_life("b", Event::Censored, 3, {0.0, 0.0})};
  ModelParams p;
  p.alpha0 = -2.0;
  p.alpha = {0.4, -0.3};
  p.beta0 = -1.5;
  p.beta = {0.2, 0.1};
  const RegularizedLossSpec none;
  const std::vector<double> g = gradient(p, data, none);
  // flattened order: alpha0, alpha[0..1], beta0, beta[0..1]
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);
  CHECK(g[4] == 0.0);
  CHECK(g[5] == 0.0);
}

TEST_CASE("observed information matches finite differences of the gradient") {
  Rng rng(23);
  const auto inst = test_util::random_instance(rng, 2, 3, 6, true);
  const ObservedInformation info = observed_information(inst.params, inst.data);
  const std::vector<double> fd = test_util::fd_information(inst.params, inst.data);
  REQUIRE(info.dim == inst.params.dim());
  for (std::size_t r = 0; r < info.dim; ++r) {
    for (std::size_t c = 0; c < info.dim; ++c) {
      const double h = info.at(r, c);
      const double f = fd[r * info.dim + c];
      CHECK(std::abs(h - f) <= 1e-4 * std::max({1.0, std::abs(h), std::abs(f)}));
    }
  }
}

TEST_CASE("observed information is symmetric") {
  Rng rng(29);
  const auto inst = test_util::random_instance(rng, 3, 4, 8, true);
  const ObservedInformation info = observed_information(inst.params, inst.data);
  for (std::size_t r = 0; r < info.dim; ++r)
    for (std::size_t c = r + 1; c < info.dim; ++c)
      CHECK(info.at(r, c) == approx_rel(info.at(c, r), 1e-12));
}

TEST_CASE("observed information is positive definite at a regularized optimum") {
  Rng rng(31);
  const auto inst = test_util::random_instance(rng, 2, 6, 8, true);
  RegularizedLossSpec spec;
  spec.c1_alpha = 0.1;
  spec.c2_beta = 0.1;
  spec.penalize_intercepts = true;
  FitConfig cfg;
  cfg.max_iters = 4000;
  cfg.init = moment_init(inst.data);
  const FittedModel fit = fit_coordinate_descent(inst.data, spec, cfg);
  REQUIRE(fit.converged);
  CHECK(test_util::cholesky_spd(fit.information.matrix, fit.information.dim));
}

TEST_CASE("a vanishing terminal hazard raises instead of clamping") {
  ModelParams p;
  p.alpha0 = -695.0;  // exp(-695) ~ 1e-302, below the terminal floor once summed
  p.alpha = {0.0};
  p.beta0 = -695.0;
  p.beta = {0.0};
  const std::vector<Lifetime> failed{const_life("a", Event::Failed, 1, {0.0})};
  CHECK_THROWS_AS(log_likelihood(p, failed), numeric_range_error);

  // Censoring has no failure term, so the same hazard is representable.
  const std::vector<Lifetime> censored{const_life("a", Event::Censored, 1, {0.0})};
  double ll = 1.0;
  CHECK_NOTHROW(ll = log_likelihood(p, censored));
  CHECK(ll <= 0.0);
  CHECK(ll > -1e-299);
}

TEST_CASE("log1m_exp is accurate on both ends") {
  CHECK(series::log1m_exp(1e-10) == approx_rel(std::log(1e-10), 1e-6));
  CHECK(series::log1m_exp(50.0) == approx_rel(-std::exp(-50.0), 1e-10));
  CHECK(series::log1m_exp(std::log(2.0)) == approx_rel(std::log(0.5), 1e-12));
}
