#include "lshm/cox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "loss_walk.hpp"
#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"

namespace lshm {

void CoxParams::validate() const {
  if (!(zeta > 0.0) || !std::isfinite(zeta) || !(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("Weibull shape and scale must be positive finite");
  }
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw std::invalid_argument("coefficients must be finite");
  }
}

double cox_hazard(const CoxParams& params, std::size_t t,
                  std::span<const double> x_row) {
  params.validate();
  if (t == 0) throw std::invalid_argument("steps are 1-based");
  if (x_row.size() != params.coeffs.size()) {
    throw dimension_error("covariate row does not match coefficients");
  }
  const double tt = static_cast<double>(t);
  const double h = params.zeta / params.eta *
                   std::pow(tt / params.eta, params.zeta - 1.0) *
                   detail::guarded_exp(
                       detail::linear_predictor(0.0, params.coeffs, x_row));
  if (!std::isfinite(h) || !(h > 0.0)) {
    throw numeric_range_error("hazard left the representable range");
  }
  return h;
}

std::vector<double> cox_lambda_series(const CoxParams& params, const Lifetime& life) {
  life.validate();
  std::vector<double> lam(life.length());
  for (std::size_t j = 0; j < life.length(); ++j) {
    lam[j] = cox_hazard(params, j + 1, life.covariates.row(j));
  }
  return lam;
}

double cox_loss(const CoxParams& params, std::span<const Lifetime> data,
                const RegularizedLossSpec& spec) {
  if (data.empty()) throw data_error("empty dataset");
  double nll = 0.0;
  for (std::size_t idx : detail::id_order(data)) {
    const std::vector<double> lam = cox_lambda_series(params, data[idx]);
    nll -= series::loglik_from_lambda(lam, data[idx].event);
  }
  double pen = 0.0;
  for (double c : params.coeffs) pen += c * c;
  return nll + spec.c1_alpha * pen;
}

namespace {

// Coordinate view over theta = (log zeta, log eta, coeffs). The per-step
// exponent is
//   E(t) = u - v + (e^u - 1)(log t - v) + coeffs . x(t),  u = log zeta, v = log eta,
// cached per step so a move only perturbs it:
//   u += delta   adds delta + (e^(u+delta) - e^u)(log t - v)
//   v += delta   adds -e^u delta (E is linear in v)
//   c_k += delta adds delta x_k(t)
class CoxProblem final : public CoordinateProblem {
 public:
  CoxProblem(std::span<const Lifetime> data, const RegularizedLossSpec& spec)
      : spec_(spec) {
    for (std::size_t idx : detail::id_order(data)) lives_.push_back(&data[idx]);
    p_ = lives_.front()->n_features();
    std::size_t max_t = 0;
    for (const Lifetime* life : lives_) max_t = std::max(max_t, life->length());
    log_t_.resize(max_t);
    for (std::size_t j = 0; j < max_t; ++j) {
      log_t_[j] = std::log(static_cast<double>(j + 1));
    }
    cache_.resize(lives_.size());
  }

  std::size_t dim() const override { return p_ + 2; }

  double set_point(std::span<const double> theta) override {
    if (theta.size() != dim()) throw dimension_error("bad parameter length");
    const double u = theta[0], v = theta[1];
    const std::span<const double> coeffs = theta.subspan(2);
    const double ez = std::exp(u);
    double nll = 0.0;
    for (std::size_t i = 0; i < lives_.size(); ++i) {
      const Lifetime& life = *lives_[i];
      const std::size_t t_max = life.length();
      LifeCache& c = cache_[i];
      c.expo.resize(t_max);
      c.lam.resize(t_max);
      for (std::size_t j = 0; j < t_max; ++j) {
        c.expo[j] = u - v + (ez - 1.0) * (log_t_[j] - v) +
                    detail::linear_predictor(0.0, coeffs, life.covariates.row(j));
        c.lam[j] = detail::guarded_exp(c.expo[j]);
      }
      nll += detail::streamed_loss(t_max, life.event,
                                   [&](std::size_t j) { return c.lam[j]; });
    }
    theta_.assign(theta.begin(), theta.end());
    double pen = 0.0;
    for (double ck : coeffs) pen += ck * ck;
    pen_ = spec_.c1_alpha * pen;
    return nll + pen_;
  }

  std::vector<double> gradient() const override {
    const double u = theta_[0], v = theta_[1];
    const double ez = std::exp(u);
    std::vector<double> grad(dim(), 0.0);
    for (std::size_t i = 0; i < lives_.size(); ++i) {
      const Lifetime& life = *lives_[i];
      const LifeCache& c = cache_[i];
      const std::size_t t_max = life.length();
      for (std::size_t j = 0; j < t_max; ++j) {
        double w = 1.0;
        if (life.event == Event::Failed && j + 1 == t_max) {
          w = series::terminal_weight(c.lam[j]);
        }
        const double wl = w * c.lam[j];
        grad[0] += wl * (1.0 + ez * (log_t_[j] - v));
        grad[1] -= wl * ez;
        const auto x = life.covariates.row(j);
        for (std::size_t k = 0; k < p_; ++k) grad[2 + k] += wl * x[k];
      }
    }
    for (std::size_t k = 0; k < p_; ++k) {
      grad[2 + k] += 2.0 * spec_.c1_alpha * theta_[2 + k];
    }
    return grad;
  }

  double objective_with_move(std::size_t coordinate, double delta) const override {
    const double u = theta_[0], v = theta_[1];
    double nll = 0.0;
    if (coordinate == 0) {
      const double dz = std::exp(u + delta) - std::exp(u);
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const LifeCache& c = cache_[i];
        nll += detail::streamed_loss(
            lives_[i]->length(), lives_[i]->event, [&](std::size_t j) {
              return detail::guarded_exp(c.expo[j] + delta +
                                         dz * (log_t_[j] - v));
            });
      }
    } else if (coordinate == 1) {
      const double factor = detail::guarded_exp(-std::exp(u) * delta);
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const LifeCache& c = cache_[i];
        nll += detail::streamed_loss(
            lives_[i]->length(), lives_[i]->event,
            [&](std::size_t j) { return c.lam[j] * factor; });
      }
    } else if (coordinate < dim()) {
      const std::size_t k = coordinate - 2;
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const Lifetime& life = *lives_[i];
        const LifeCache& c = cache_[i];
        nll += detail::streamed_loss(
            life.length(), life.event, [&](std::size_t j) {
              return detail::guarded_exp(c.expo[j] +
                                         delta * life.covariates(j, k));
            });
      }
    } else {
      throw dimension_error("coordinate index out of range");
    }
    double pen = pen_;
    if (coordinate >= 2) {
      const double ck = theta_[coordinate];
      pen += spec_.c1_alpha * ((ck + delta) * (ck + delta) - ck * ck);
    }
    return nll + pen;
  }

 private:
  struct LifeCache {
    std::vector<double> expo, lam;
  };

  RegularizedLossSpec spec_;
  std::vector<const Lifetime*> lives_;
  std::size_t p_ = 0;
  std::vector<double> log_t_;
  std::vector<LifeCache> cache_;
  std::vector<double> theta_;
  double pen_ = 0.0;
};

}  // namespace

CoxFit fit_cox(std::span<const Lifetime> data, const RegularizedLossSpec& spec,
               const FitConfig& cfg) {
  if (data.empty()) throw data_error("empty dataset");
  const std::size_t p = data.front().n_features();
  double mean_t = 0.0;
  for (const Lifetime& life : data) {
    life.validate();
    if (life.n_features() != p) {
      throw dimension_error("lifetime '" + life.id + "' feature count differs");
    }
    mean_t += static_cast<double>(life.length());
  }
  mean_t /= static_cast<double>(data.size());

  CoxProblem problem(data, spec);
  const std::size_t max_iters = detail::resolve_max_iters(cfg.max_iters, problem.dim());

  CoxFit best;
  bool have_best = false;
  for (double zeta0 : {0.5, 1.0, 2.0}) {
    std::vector<double> start(problem.dim(), 0.0);
    start[0] = std::log(zeta0);
    start[1] = std::log(std::max(1.0, mean_t));
    CdResult r = minimize_coordinate_descent(problem, start, cfg.epsilon, max_iters,
                                             cfg.line_search_tol);
    if (!have_best || r.value < best.loss) {
      have_best = true;
      best.params.zeta = std::exp(r.x[0]);
      best.params.eta = std::exp(r.x[1]);
      best.params.coeffs.assign(r.x.begin() + 2, r.x.end());
      best.loss = r.value;
      best.iterations = r.iterations;
      best.converged = r.converged;
      best.trace = std::move(r.trace);
      best.line_search_warning = r.line_search_warning;
    }
  }
  return best;
}

}  // namespace lshm
