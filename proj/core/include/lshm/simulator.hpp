#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lshm/rng.hpp"
#include "lshm/types.hpp"

namespace lshm {

enum class CovariateSource { IidStandardNormal, Custom };

struct SimConfig {
  ModelParams true_params;
  std::size_t n_lifetimes = 1;
  std::size_t horizon = 0;  // 0 resolves to default_horizon(true_params)
  std::uint64_t seed = 0;
  CovariateSource source = CovariateSource::IidStandardNormal;
  // Fills one covariate row for 1-based step; consulted when source == Custom.
  std::function<void(std::size_t step, std::span<double> out, Rng&)> custom_source;
};

// Expected lifetime under x == 0 (sum of survival probabilities), capped at
// 1e7 steps.
double expected_lifetime_at_zero(const ModelParams& params);

// 10x the expected lifetime at zero covariates, at least 1.
std::size_t default_horizon(const ModelParams& params);

// Inverse-survival sampling: draw v ~ U(0,1), walk the hazard forward, fail
// during the first step where exp(-cumulative hazard) <= v, censor at the
// horizon. Draw order per lifetime: v first, then covariate rows in step
// order; this is the distribution the discrete likelihood describes.
// The returned lifetime has empty id/unit; callers assign them.
Lifetime sample_lifetime(const SimConfig& cfg, Rng& rng);

// Same walk with the failure draw v supplied by the caller.
Lifetime sample_lifetime_with(const SimConfig& cfg, double v, Rng& covariate_rng);

// n_lifetimes samples, lifetime i on Rng::for_stream(seed, i), ids
// sim-00001.. (unit == id).
std::vector<Lifetime> simulate_dataset(const SimConfig& cfg);

// Hidden-Markov comparison generator: a left-to-right 3-state chain with an
// absorbing third state, categorical emissions y in 1..5, and hazard
//   h(t) = (zeta/eta) (t/eta)^(zeta-1) exp(gamma z(t))
// on the unit-step grid. Observed covariates are [log t, y_t].
struct HmmConfig {
  std::array<std::array<double, 3>, 3> transition = {
      {{0.90, 0.09, 0.01}, {0.0, 0.87, 0.13}, {0.0, 0.0, 1.0}}};
  std::array<std::array<double, 5>, 3> emission = {
      {{0.60, 0.30, 0.05, 0.05, 0.0},
       {0.10, 0.20, 0.40, 0.20, 0.10},
       {0.0, 0.05, 0.05, 0.30, 0.60}}};
  double zeta = 20.0;
  double eta = 4.5;
  double gamma = 1.4;
  int start_state = 1;      // 1-based; the chain sits here for step 1
  std::size_t horizon = 60;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless rows are stochastic, state 3 is
  // absorbing, and the hazard parameters are positive.
  void validate() const;
};

double hmm_hazard(const HmmConfig& cfg, std::size_t t, int state);

struct HmmLifetime {
  Lifetime life;
  std::vector<int> states;  // true state per step, 1-based
};

// Draw order per step: state transition (from step 2 on), then emission.
// The failure draw v comes first, as in sample_lifetime.
HmmLifetime sample_hmm_lifetime(const HmmConfig& cfg, Rng& rng);

std::vector<HmmLifetime> simulate_hmm_dataset(const HmmConfig& cfg, std::size_t n);

// Stochastic-degradation comparison generator: per-unit signal
//   s(t) = integral of (alpha_i + beta_i w(v)) dv + gamma_i B(t),
//   w(t) = 2 + sin(pi t / 12),
// sampled on a fixed grid; the unit fails at the first grid point with
// s >= failure_threshold. The drift is integrated exactly per interval via
// the closed form of the environment antiderivative, and the Brownian part
// uses exact N(0, gamma^2 h) increments, so grid values carry no
// discretization error.
struct BianConfig {
  double alpha_mean = 1.0;
  double alpha_sd = 0.0;
  double beta_mean = 1.0;
  double beta_sd = 0.0;
  double noise_scale = 1.0;  // mean of the per-unit Brownian coefficient
  double noise_sd = 0.0;
  double failure_threshold = 150.0;
  double step = 1.0;
  double horizon = 1000.0;
  std::uint64_t seed = 0;

  void validate() const;
};

double bian_environment(double t);     // 2 + sin(pi t / 12)
double bian_env_antiderivative(double t);  // 2t + (12/pi)(1 - cos(pi t / 12))

struct BianPath {
  std::vector<double> time;     // grid points step, 2 step, ...
  std::vector<double> signal;
  std::vector<double> environment;
  bool failed = false;
  double failure_time = 0.0;    // last grid time when censored
  double alpha = 0.0, beta = 0.0, gamma = 0.0;  // realized unit coefficients
};

// Coefficient draw order: alpha, beta, gamma, then one normal per grid step.
BianPath sample_bian_signal(const BianConfig& cfg, Rng& rng);

// Covariate rows [signal, environment] on the grid; event from path.failed.
Lifetime bian_to_lifetime(const BianPath& path, std::string id);

}  // namespace lshm
