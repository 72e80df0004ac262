#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>

#include "lshm/decision.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/rng.hpp"
#include "lshm/types.hpp"

namespace test_util {

// Purely relative tolerance (doctest's default mixes in an absolute term).
inline doctest::Approx approx_rel(double value, double rel) {
  return doctest::Approx(value).epsilon(rel).scale(0.0);
}

inline lshm::Lifetime make_life(std::string id, lshm::Event event,
                                const std::vector<std::vector<double>>& rows) {
  lshm::Lifetime life;
  life.id = std::move(id);
  life.unit = life.id;
  life.covariates = lshm::Matrix::from_rows(rows);
  life.event = event;
  return life;
}

inline lshm::Lifetime const_life(std::string id, lshm::Event event, std::size_t t,
                                 const std::vector<double>& row) {
  return make_life(std::move(id), event, std::vector<std::vector<double>>(t, row));
}

// Generating truth used across recovery-style tests.
inline lshm::ModelParams recovery_truth() {
  lshm::ModelParams p;
  p.alpha0 = -14.0;
  p.alpha = {5.0};
  p.beta0 = -7.0;
  p.beta = {0.5};
  return p;
}

inline std::size_t pick(lshm::Rng& rng, std::size_t lo, std::size_t hi) {
  const std::size_t span = hi - lo + 1;
  const auto raw = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(span));
  return lo + std::min(raw, span - 1);
}

inline double uniform_in(lshm::Rng& rng, double lo, double hi) {
  return lo + rng.uniform01() * (hi - lo);
}

struct RandomInstance {
  std::vector<lshm::Lifetime> data;
  lshm::ModelParams params;
};

// Small random fitting problems with tame hazards: exponents stay well
// inside the representable window and terminal hazards far from the floor
// the likelihood guards against.
inline RandomInstance random_instance(lshm::Rng& rng, std::size_t max_p = 3,
                                      std::size_t max_n = 5, std::size_t max_t = 10,
                                      bool force_mixed = false) {
  RandomInstance inst;
  const std::size_t p = pick(rng, 1, max_p);
  const std::size_t n = pick(rng, 1, max_n);
  inst.params.alpha0 = uniform_in(rng, -2.5, -1.0);
  inst.params.beta0 = uniform_in(rng, -3.0, -1.5);
  inst.params.alpha.resize(p);
  inst.params.beta.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    inst.params.alpha[k] = uniform_in(rng, -0.6, 0.6);
    inst.params.beta[k] = uniform_in(rng, -0.6, 0.6);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = pick(rng, 1, max_t);
    std::vector<std::vector<double>> rows(t, std::vector<double>(p));
    for (auto& row : rows)
      for (double& x : row) x = 0.7 * rng.normal();
    lshm::Event event = rng.uniform01() < 0.5 ? lshm::Event::Failed : lshm::Event::Censored;
    if (force_mixed && i == 0) event = lshm::Event::Failed;
    if (force_mixed && i == 1) event = lshm::Event::Censored;
    inst.data.push_back(make_life("life-" + std::to_string(i), event, rows));
  }
  return inst;
}

// Central finite differences of the regularized loss.
inline std::vector<double> fd_gradient(const lshm::ModelParams& params,
                                       std::span<const lshm::Lifetime> data,
                                       const lshm::RegularizedLossSpec& spec,
                                       double h = 1e-5) {
  const std::vector<double> theta = params.flatten();
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::vector<double> hi = theta, lo = theta;
    hi[i] += h;
    lo[i] -= h;
    const double fhi = lshm::regularized_loss(lshm::ModelParams::unflatten(hi), data, spec);
    const double flo = lshm::regularized_loss(lshm::ModelParams::unflatten(lo), data, spec);
    grad[i] = (fhi - flo) / (2.0 * h);
  }
  return grad;
}

// Hessian of the negative log-likelihood by central differences of the
// (already FD-verified) analytic gradient.
inline std::vector<double> fd_information(const lshm::ModelParams& params,
                                          std::span<const lshm::Lifetime> data,
                                          double h = 1e-4) {
  const lshm::RegularizedLossSpec none;
  const std::vector<double> theta = params.flatten();
  const std::size_t d = theta.size();
  std::vector<double> hess(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    std::vector<double> hi = theta, lo = theta;
    hi[i] += h;
    lo[i] -= h;
    const std::vector<double> ghi =
        lshm::gradient(lshm::ModelParams::unflatten(hi), data, none);
    const std::vector<double> glo =
        lshm::gradient(lshm::ModelParams::unflatten(lo), data, none);
    for (std::size_t j = 0; j < d; ++j) hess[i * d + j] = (ghi[j] - glo[j]) / (2.0 * h);
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (hess[i * d + j] + hess[j * d + i]);
      hess[i * d + j] = hess[j * d + i] = avg;
    }
  return hess;
}

// True iff the symmetric matrix factors with strictly positive pivots.
inline bool cholesky_spd(std::vector<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  return true;
}

struct BruteThreshold {
  double threshold = 0.0;
  double risk = 0.0;
  std::size_t n_eligible = 0;
};

// Exhaustive empirical-risk scan written independently of the library: try
// every observed criterion value plus {0, +inf} directly, recompute warning
// times and costs from scratch, resolve ties to the largest threshold.
inline BruteThreshold brute_force_threshold(std::span<const lshm::CriterionSeries> series,
                                            const lshm::CostSpec& cost,
                                            bool include_censored) {
  std::vector<double> candidates{0.0, std::numeric_limits<double>::infinity()};
  for (const auto& s : series)
    for (double v : s.values) candidates.push_back(v);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto d = static_cast<double>(cost.d);
  BruteThreshold best;
  bool found = false;
  for (double gamma : candidates) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& s : series) {
      const std::size_t t = s.values.size();
      if (t < cost.d) continue;
      if (!s.failed && !include_censored) continue;
      std::size_t r = t;
      for (std::size_t j = 0; j < t; ++j) {
        if (s.values[j] >= gamma) {
          r = j + 1;
          break;
        }
      }
      const double xi = static_cast<double>(t) - static_cast<double>(r);
      total += s.failed ? (xi < d ? cost.c1 * (d - xi) : cost.c2 * (xi - d))
                        : cost.c2 * std::max(0.0, xi - d);
      ++n;
    }
    if (n == 0) continue;
    const double risk = total / static_cast<double>(n);
    if (!found || risk <= best.risk) {
      best = {gamma, risk, n};
      found = true;
    }
  }
  return best;
}

// Self-cleaning scratch directory for file-based tests.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = std::filesystem::temp_directory_path() /
           ("lshm-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test_util
