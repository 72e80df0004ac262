#include "lshm/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"

namespace lshm {

std::uint64_t Rng::mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::for_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix(seed) ^ mix(stream * 0x9e3779b97f4a7c15ULL + 1));
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::size_t Rng::categorical(std::span<const double> probs) {
  if (probs.empty()) throw dimension_error("categorical needs probabilities");
  const double u = uniform01();
  double cum = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    cum += probs[k];
    if (u < cum) return k;
  }
  return probs.size() - 1;  // rounding slack in the row sum
}

double expected_lifetime_at_zero(const ModelParams& params) {
  params.validate();
  const std::vector<double> zeros(params.n_features(), 0.0);
  const double minc = mu_step(params, zeros);
  const double g = g_term(params, zeros);
  double cum = 0.0;
  double expected = 0.0;  // sum over t >= 0 of S(t), S(0) = 1
  expected += 1.0;
  for (std::size_t t = 1; t <= 10000000; ++t) {
    cum += static_cast<double>(t) * minc + g;
    const double survival = std::exp(-cum);
    expected += survival;
    if (survival < 1e-12) break;
  }
  return expected;
}

std::size_t default_horizon(const ModelParams& params) {
  const double h = std::ceil(10.0 * expected_lifetime_at_zero(params));
  if (h < 1.0) return 1;
  if (h > 1e7) return 10000000;
  return static_cast<std::size_t>(h);
}

namespace {

void fill_row(const SimConfig& cfg, std::size_t step, std::span<double> row, Rng& rng) {
  if (cfg.source == CovariateSource::Custom) {
    if (!cfg.custom_source) {
      throw std::invalid_argument("custom covariate source not set");
    }
    cfg.custom_source(step, row, rng);
  } else {
    for (double& v : row) v = rng.normal();
  }
}

std::string stream_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim-%05zu", i + 1);
  return buf;
}

}  // namespace

Lifetime sample_lifetime_with(const SimConfig& cfg, double v, Rng& covariate_rng) {
  cfg.true_params.validate();
  if (!(v >= 0.0) || !(v < 1.0)) {
    throw std::invalid_argument("failure draw v must lie in [0, 1)");
  }
  const std::size_t horizon =
      cfg.horizon != 0 ? cfg.horizon : default_horizon(cfg.true_params);
  const std::size_t p = cfg.true_params.n_features();

  std::vector<double> row(p);
  std::vector<std::vector<double>> rows;
  double mu = 0.0;
  double cum = 0.0;
  bool failed = false;
  for (std::size_t t = 1; t <= horizon; ++t) {
    fill_row(cfg, t, row, covariate_rng);
    rows.push_back(row);
    mu += mu_step(cfg.true_params, row);
    cum += mu + g_term(cfg.true_params, row);
    if (std::exp(-cum) <= v) {
      failed = true;
      break;
    }
  }
  Lifetime life;
  life.covariates = Matrix::from_rows(rows);
  life.event = failed ? Event::Failed : Event::Censored;
  return life;
}

Lifetime sample_lifetime(const SimConfig& cfg, Rng& rng) {
  const double v = rng.uniform01();
  return sample_lifetime_with(cfg, v, rng);
}

std::vector<Lifetime> simulate_dataset(const SimConfig& cfg) {
  if (cfg.n_lifetimes == 0) throw std::invalid_argument("n_lifetimes must be >= 1");
  std::vector<Lifetime> data;
  data.reserve(cfg.n_lifetimes);
  for (std::size_t i = 0; i < cfg.n_lifetimes; ++i) {
    Rng rng = Rng::for_stream(cfg.seed, i);
    Lifetime life = sample_lifetime(cfg, rng);
    life.id = stream_id(i);
    life.unit = life.id;
    data.push_back(std::move(life));
  }
  return data;
}

void HmmConfig::validate() const {
  auto check_rows = [](const auto& m, std::size_t cols, const char* name) {
    for (const auto& row : m) {
      double sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        if (row[j] < 0.0) {
          throw std::invalid_argument(std::string(name) + " has a negative entry");
        }
        sum += row[j];
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string(name) + " rows must sum to 1");
      }
    }
  };
  check_rows(transition, 3, "transition matrix");
  check_rows(emission, 5, "emission matrix");
  if (transition[2][0] != 0.0 || transition[2][1] != 0.0 || transition[2][2] != 1.0) {
    throw std::invalid_argument("state 3 must be absorbing");
  }
  if (start_state < 1 || start_state > 3) {
    throw std::invalid_argument("start_state must be 1..3");
  }
  if (!(zeta > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("hazard shape and scale must be positive");
  }
  if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
}

double hmm_hazard(const HmmConfig& cfg, std::size_t t, int state) {
  if (t == 0) throw std::invalid_argument("steps are 1-based");
  if (state < 1 || state > 3) throw std::invalid_argument("state must be 1..3");
  const double tt = static_cast<double>(t);
  return cfg.zeta / cfg.eta * std::pow(tt / cfg.eta, cfg.zeta - 1.0) *
         std::exp(cfg.gamma * static_cast<double>(state));
}

HmmLifetime sample_hmm_lifetime(const HmmConfig& cfg, Rng& rng) {
  cfg.validate();
  const double v = rng.uniform01();
  int state = cfg.start_state;
  double cum = 0.0;
  bool failed = false;
  std::vector<std::vector<double>> rows;
  std::vector<int> states;
  for (std::size_t t = 1; t <= cfg.horizon; ++t) {
    if (t > 1) {
      state = static_cast<int>(rng.categorical(cfg.transition[state - 1])) + 1;
    }
    const int y = static_cast<int>(rng.categorical(cfg.emission[state - 1])) + 1;
    rows.push_back({std::log(static_cast<double>(t)), static_cast<double>(y)});
    states.push_back(state);
    cum += hmm_hazard(cfg, t, state);
    if (std::exp(-cum) <= v) {
      failed = true;
      break;
    }
  }
  HmmLifetime out;
  out.life.covariates = Matrix::from_rows(rows);
  out.life.event = failed ? Event::Failed : Event::Censored;
  out.states = std::move(states);
  return out;
}

std::vector<HmmLifetime> simulate_hmm_dataset(const HmmConfig& cfg, std::size_t n) {
  if (n == 0) throw std::invalid_argument("need at least one lifetime");
  std::vector<HmmLifetime> data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_stream(cfg.seed, i);
    HmmLifetime hl = sample_hmm_lifetime(cfg, rng);
    hl.life.id = stream_id(i);
    hl.life.unit = hl.life.id;
    data.push_back(std::move(hl));
  }
  return data;
}

void BianConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(failure_threshold > 0.0)) {
    throw std::invalid_argument("failure_threshold must be positive");
  }
  if (!(horizon >= step)) throw std::invalid_argument("horizon must cover one step");
  if (alpha_sd < 0.0 || beta_sd < 0.0 || noise_sd < 0.0) {
    throw std::invalid_argument("prior sds must be nonnegative");
  }
}

double bian_environment(double t) {
  return 2.0 + std::sin(std::numbers::pi * t / 12.0);
}

double bian_env_antiderivative(double t) {
  return 2.0 * t +
         12.0 / std::numbers::pi * (1.0 - std::cos(std::numbers::pi * t / 12.0));
}

BianPath sample_bian_signal(const BianConfig& cfg, Rng& rng) {
  cfg.validate();
  BianPath path;
  path.alpha = cfg.alpha_mean + cfg.alpha_sd * rng.normal();
  path.beta = cfg.beta_mean + cfg.beta_sd * rng.normal();
  path.gamma = cfg.noise_scale + cfg.noise_sd * rng.normal();

  const double sqrt_h = std::sqrt(cfg.step);
  double s = 0.0;
  double t_prev = 0.0;
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * cfg.step;
    if (t > cfg.horizon) break;
    const double drift = path.alpha * (t - t_prev) +
                         path.beta * (bian_env_antiderivative(t) -
                                      bian_env_antiderivative(t_prev));
    s += drift + path.gamma * sqrt_h * rng.normal();
    path.time.push_back(t);
    path.signal.push_back(s);
    path.environment.push_back(bian_environment(t));
    t_prev = t;
    if (s >= cfg.failure_threshold) {
      path.failed = true;
      path.failure_time = t;
      return path;
    }
  }
  if (path.time.empty()) throw data_error("horizon shorter than one grid step");
  path.failed = false;
  path.failure_time = path.time.back();
  return path;
}

Lifetime bian_to_lifetime(const BianPath& path, std::string id) {
  if (path.time.empty()) throw data_error("empty degradation path");
  Lifetime life;
  life.id = std::move(id);
  life.unit = life.id;
  life.covariates = Matrix(path.time.size(), 2);
  for (std::size_t k = 0; k < path.time.size(); ++k) {
    life.covariates(k, 0) = path.signal[k];
    life.covariates(k, 1) = path.environment[k];
  }
  life.event = path.failed ? Event::Failed : Event::Censored;
  return life;
}

}  // namespace lshm
