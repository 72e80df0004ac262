#include "lshm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "loss_walk.hpp"
#include "lshm/errors.hpp"
#include "lshm/hazard.hpp"

namespace lshm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_or_inf(const std::function<double(double)>& f, double x) {
  const double v = f(x);
  return std::isnan(v) ? kInf : v;
}

}  // namespace

namespace detail {

namespace {

// Golden-section over [a, b] for a convex section, keeping the best probe.
// seed_x/seed_f carry the best point already known. Ties keep the left
// interval: for a convex section a minimizer lies in [x1, x2] whenever
// f(x1) == f(x2), so [a, x2] retains it, and on sections that flatten into
// an underflow plateau this walks to the plateau's near edge instead of
// parking arbitrarily deep. Equal-valued probes likewise prefer the
// smaller step.
LineSearchResult golden_section(const std::function<double(double)>& f, double f0,
                                double a, double b, double tol, double seed_x,
                                double seed_f) {
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = eval_or_inf(f, x1);
  double f2 = eval_or_inf(f, x2);
  double best_x = seed_x, best_f = seed_f;
  auto consider = [&](double x, double fx) {
    if (fx < best_f || (fx == best_f && x < best_x)) {
      best_x = x;
      best_f = fx;
    }
  };
  consider(x1, f1);
  consider(x2, f2);
  double prev_width = kInf;
  for (std::size_t it = 0; b - a > tol && it < 2000; ++it) {
    // When the interval is huge the absolute tol is below one ulp of the
    // endpoints; stop once the width no longer shrinks numerically.
    if (!(b - a < prev_width)) break;
    prev_width = b - a;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = eval_or_inf(f, x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = eval_or_inf(f, x2);
      consider(x2, f2);
    }
  }
  if (!(best_f < f0)) return {0.0, f0, false};
  return {best_x, best_f, false};
}

}  // namespace

LineSearchResult line_search_from(const std::function<double(double)>& f,
                                  double f0, double tol, double max_probe) {
  if (!(tol > 0.0)) throw std::invalid_argument("line search tol must be positive");

  double s = 1.0;
  double fs = eval_or_inf(f, s);
  double lo = 0.0;
  if (fs > f0) {
    // Worse at 1; shrink. Once s < tol any minimizer left of s is within
    // tol of 0, so the current point already minimizes the line.
    bool improved = false;
    while (s > tol) {
      s *= 0.5;
      fs = eval_or_inf(f, s);
      if (fs < f0) {
        improved = true;
        break;
      }
    }
    if (!improved) return {0.0, f0, false};
  }
  if (fs == f0) {
    // Flat at double resolution: the objective's scale along this
    // coordinate lives beyond the probe, so expand until it shows. Without
    // this, a coordinate parked far down an exp() tail can never recover.
    double probe = s;
    double fp = fs;
    while (fp == f0) {
      if (probe > max_probe) return {0.0, f0, false};  // genuinely flat line
      lo = probe;
      probe *= 2.0;
      fp = eval_or_inf(f, probe);
    }
    if (fp > f0) {
      // The first visible change is a rise; any dip hides inside (0, probe).
      return golden_section(f, f0, 0.0, probe, tol, 0.0, f0);
    }
    s = probe;
    fs = fp;
  }

  // Double while the objective keeps falling.
  double hi = 2.0 * s;
  double fhi = eval_or_inf(f, hi);
  std::size_t doublings = 0;
  while (fhi < fs) {
    if (++doublings > 200) return {0.0, f0, true};
    lo = s;
    s = hi;
    fs = fhi;
    hi *= 2.0;
    fhi = eval_or_inf(f, hi);
  }

  // Golden-section on [lo, hi], which brackets the minimizer.
  return golden_section(f, f0, lo, hi, tol, s, fs);
}

std::size_t resolve_max_iters(std::size_t configured, std::size_t dim) {
  return configured != 0 ? configured : 50 * dim;
}

}  // namespace detail

LineSearchResult line_search_1d(const std::function<double(double)>& objective,
                                double tol) {
  return detail::line_search_from(objective, eval_or_inf(objective, 0.0), tol);
}

CdResult minimize_coordinate_descent(CoordinateProblem& problem,
                                     std::span<const double> start,
                                     double epsilon, std::size_t max_iters,
                                     double line_search_tol) {
  if (start.size() != problem.dim()) {
    throw dimension_error("start point does not match problem dimension");
  }
  std::vector<double> theta(start.begin(), start.end());
  double w = problem.set_point(theta);

  CdResult res;
  std::vector<std::size_t> idx(theta.size());
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const std::vector<double> grad = problem.gradient();
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(grad[a]) > std::abs(grad[b]);
    });

    // Scan coordinates by |gradient|, take the first whose exact line
    // search improves the objective by at least epsilon. A coordinate that
    // cannot reach epsilon progress is passed over (its sub-epsilon move is
    // remembered); when no coordinate reaches epsilon the best of those
    // leftover moves is applied and the fit has converged. Gradient size
    // orders the scan but does not measure progress: a coordinate parked
    // far down an exp() tail has a microscopic gradient yet may hold almost
    // all of the remaining improvement.
    bool moved = false;
    std::size_t best_c = 0;
    double best_step = 0.0, best_delta = 0.0, best_w = w;
    for (std::size_t c : idx) {
      const double gc = grad[c];
      if (gc == 0.0) break;  // sorted by |grad|, the rest are zero too
      auto f = [&](double x) -> double {
        if (x == 0.0) return w;
        try {
          return problem.objective_with_move(c, -x * gc);
        } catch (const numeric_range_error&) {
          return kInf;
        }
      };
      // The probe cap bounds the physical move |x * gc|: parameters are
      // exponents, so moves beyond a few thousand are never useful, while a
      // microscopic gradient needs a correspondingly enormous step
      // multiplier to show anything.
      const double max_probe = 4096.0 / std::abs(gc);
      const LineSearchResult ls =
          detail::line_search_from(f, w, line_search_tol, max_probe);
      if (ls.bracket_failed) res.line_search_warning = true;
      if (!(ls.step > 0.0) || !(ls.value < w)) continue;

      const double delta = -ls.step * gc;
      theta[c] += delta;
      double w_new;
      try {
        w_new = problem.set_point(theta);
      } catch (const numeric_range_error&) {
        theta[c] -= delta;
        problem.set_point(theta);
        continue;
      }
      // The exact recompute must agree that this is a strict decrease;
      // otherwise treat the coordinate as making no progress.
      if (!(w_new < w)) {
        theta[c] -= delta;
        problem.set_point(theta);
        continue;
      }
      if (w - w_new >= epsilon) {
        w = w_new;
        res.trace.push_back({c, ls.step, w});
        ++res.iterations;
        moved = true;
        break;
      }
      if (w_new < best_w) {
        best_c = c;
        best_step = ls.step;
        best_delta = delta;
        best_w = w_new;
      }
      theta[c] -= delta;
      problem.set_point(theta);
    }

    if (!moved) {
      if (best_w < w) {
        theta[best_c] += best_delta;
        w = problem.set_point(theta);
        res.trace.push_back({best_c, best_step, w});
        ++res.iterations;
      }
      res.converged = true;
      break;
    }
  }
  res.x = std::move(theta);
  res.value = w;
  return res;
}

ModelParams moment_init(std::span<const Lifetime> data) {
  if (data.empty()) throw data_error("moment_init requires at least one lifetime");
  double steps = 0.0, k1 = 0.0, fails = 0.0;
  for (const Lifetime& life : data) {
    const double len = static_cast<double>(life.length());
    steps += len;
    k1 += len * (len + 1.0) / 2.0;  // sum of mu weights: each step j adds j units
    if (life.event == Event::Failed) fails += 1.0;
  }
  const double f = fails > 0.0 ? fails : 0.5;  // all-censored data still needs a scale
  ModelParams p;
  p.alpha0 = std::log(f / (2.0 * steps));
  p.beta0 = std::log(f / (2.0 * k1));
  p.alpha.assign(data.front().n_features(), 0.0);
  p.beta.assign(data.front().n_features(), 0.0);
  return p;
}

DescentResult minimize_gradient_descent(const Objective& objective,
                                        std::vector<double> start,
                                        double epsilon, std::size_t max_iters) {
  auto value_or_inf = [&](const std::vector<double>& p) -> double {
    try {
      const double v = objective.value(p);
      return std::isnan(v) ? kInf : v;
    } catch (const numeric_range_error&) {
      return kInf;
    }
  };

  std::vector<double> x = std::move(start);
  double w = objective.value(x);  // infeasible starts propagate

  DescentResult res;
  res.objective_trace.push_back(w);
  double t = 1.0;
  std::vector<double> xn(x.size());
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const std::vector<double> g = objective.gradient(x);
    double gg = 0.0;
    for (double v : g) gg += v * v;
    if (gg == 0.0) {
      res.converged = true;
      break;
    }
    t = std::min(t * 2.0, 1e8);
    double wn = kInf;
    while (t >= 1e-18) {
      for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] - t * g[i];
      wn = value_or_inf(xn);
      if (wn <= w - 1e-4 * t * gg) break;
      t *= 0.5;
    }
    if (!(wn < w)) {
      res.converged = true;  // no representable progress along -grad
      break;
    }
    const double dw = w - wn;
    x.swap(xn);
    w = wn;
    ++res.iterations;
    res.objective_trace.push_back(w);
    if (dw < epsilon) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.value = w;
  return res;
}

namespace {

// Coordinate-descent view of the regularized latent-hazard loss. set_point
// caches per-step latent increments, transient terms, and latent prefix
// sums; a single-coordinate move then only rescales cached terms:
//   alpha0       g(j) -> g(j) * e^delta           (one exp per eval)
//   alpha_k      g(j) -> g(j) * e^(delta x_k(j))  (one exp per step)
//   beta0        mu(j) -> mu(j) * e^delta
//   beta_k       increments rescale by e^(delta x_k(j)), re-summed
class LatentProblem final : public CoordinateProblem {
 public:
  LatentProblem(std::span<const Lifetime> data, const RegularizedLossSpec& spec)
      : spec_(spec) {
    const std::vector<std::size_t> order = detail::id_order(data);
    lives_.reserve(order.size());
    for (std::size_t idx : order) lives_.push_back(&data[idx]);
    p_ = lives_.front()->n_features();
    cache_.resize(lives_.size());
  }

  std::size_t dim() const override { return 2 * p_ + 2; }

  double set_point(std::span<const double> theta) override {
    ModelParams cand = ModelParams::unflatten(theta);
    if (cand.n_features() != p_) {
      throw dimension_error("parameter vector does not match data");
    }
    double nll = 0.0;
    for (std::size_t i = 0; i < lives_.size(); ++i) {
      const Lifetime& life = *lives_[i];
      const std::size_t t_max = life.length();
      LifeCache& c = cache_[i];
      c.minc.resize(t_max);
      c.mu.resize(t_max);
      c.g.resize(t_max);
      double mu = 0.0;
      for (std::size_t j = 0; j < t_max; ++j) {
        const auto x = life.covariates.row(j);
        c.minc[j] = mu_step(cand, x);
        mu += c.minc[j];
        c.mu[j] = mu;
        c.g[j] = g_term(cand, x);
      }
      nll += step_contribution(life, [&](std::size_t j) { return c.mu[j] + c.g[j]; });
    }
    params_ = std::move(cand);
    pen_ = penalty(params_, spec_);
    obj_ = nll + pen_;
    return obj_;
  }

  std::vector<double> gradient() const override {
    std::vector<double> grad(dim(), 0.0);
    std::vector<double> dmu(p_ + 1);
    for (std::size_t i = 0; i < lives_.size(); ++i) {
      const Lifetime& life = *lives_[i];
      const LifeCache& c = cache_[i];
      const std::size_t t_max = life.length();
      std::fill(dmu.begin(), dmu.end(), 0.0);
      for (std::size_t j = 0; j < t_max; ++j) {
        const auto x = life.covariates.row(j);
        dmu[0] += c.minc[j];
        for (std::size_t k = 0; k < p_; ++k) dmu[1 + k] += x[k] * c.minc[j];
        double w = 1.0;
        if (life.event == Event::Failed && j + 1 == t_max) {
          w = series::terminal_weight(c.mu[j] + c.g[j]);
        }
        grad[0] += w * c.g[j];
        for (std::size_t k = 0; k < p_; ++k) grad[1 + k] += w * x[k] * c.g[j];
        grad[1 + p_] += w * dmu[0];
        for (std::size_t k = 0; k < p_; ++k) grad[2 + p_ + k] += w * dmu[1 + k];
      }
    }
    for (std::size_t k = 0; k < p_; ++k) {
      grad[1 + k] += 2.0 * spec_.c1_alpha * params_.alpha[k];
      grad[2 + p_ + k] += 2.0 * spec_.c2_beta * params_.beta[k];
    }
    if (spec_.penalize_intercepts) {
      grad[0] += 2.0 * spec_.c1_alpha * params_.alpha0;
      grad[1 + p_] += 2.0 * spec_.c2_beta * params_.beta0;
    }
    return grad;
  }

  double objective_with_move(std::size_t coordinate, double delta) const override {
    double nll = 0.0;
    if (coordinate == 0) {
      const double k = detail::guarded_exp(delta);
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const LifeCache& c = cache_[i];
        nll += step_contribution(*lives_[i],
                                 [&](std::size_t j) { return c.mu[j] + c.g[j] * k; });
      }
    } else if (coordinate <= p_) {
      const std::size_t k = coordinate - 1;
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const Lifetime& life = *lives_[i];
        const LifeCache& c = cache_[i];
        nll += step_contribution(life, [&](std::size_t j) {
          return c.mu[j] +
                 c.g[j] * detail::guarded_exp(delta * life.covariates(j, k));
        });
      }
    } else if (coordinate == p_ + 1) {
      const double k = detail::guarded_exp(delta);
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const LifeCache& c = cache_[i];
        nll += step_contribution(*lives_[i],
                                 [&](std::size_t j) { return c.mu[j] * k + c.g[j]; });
      }
    } else if (coordinate < dim()) {
      const std::size_t k = coordinate - p_ - 2;
      for (std::size_t i = 0; i < lives_.size(); ++i) {
        const Lifetime& life = *lives_[i];
        const LifeCache& c = cache_[i];
        double mu = 0.0;
        nll += step_contribution(life, [&](std::size_t j) {
          mu += c.minc[j] * detail::guarded_exp(delta * life.covariates(j, k));
          return mu + c.g[j];
        });
      }
    } else {
      throw dimension_error("coordinate index out of range");
    }
    return nll + moved_penalty(coordinate, delta);
  }

 private:
  struct LifeCache {
    std::vector<double> minc, mu, g;
  };

  template <class LambdaAt>
  double step_contribution(const Lifetime& life, LambdaAt&& lam_at) const {
    return detail::streamed_loss(life.length(), life.event,
                                 std::forward<LambdaAt>(lam_at));
  }

  double moved_penalty(std::size_t coordinate, double delta) const {
    double pen = pen_;
    auto bump = [&](double c, double v) { pen += c * ((v + delta) * (v + delta) - v * v); };
    if (coordinate == 0) {
      if (spec_.penalize_intercepts) bump(spec_.c1_alpha, params_.alpha0);
    } else if (coordinate <= p_) {
      bump(spec_.c1_alpha, params_.alpha[coordinate - 1]);
    } else if (coordinate == p_ + 1) {
      if (spec_.penalize_intercepts) bump(spec_.c2_beta, params_.beta0);
    } else {
      bump(spec_.c2_beta, params_.beta[coordinate - p_ - 2]);
    }
    return pen;
  }

  RegularizedLossSpec spec_;
  std::vector<const Lifetime*> lives_;
  std::size_t p_ = 0;
  std::vector<LifeCache> cache_;
  ModelParams params_;
  double pen_ = 0.0;
  double obj_ = 0.0;
};

FittedModel assemble(std::span<const Lifetime> data, const RegularizedLossSpec& spec,
                     const ModelParams& params, double loss, std::size_t iterations,
                     std::vector<TraceEntry> trace, bool converged, bool warning) {
  FittedModel model;
  model.params = params;
  model.loss = loss;
  model.iterations = iterations;
  model.trace = std::move(trace);
  model.converged = converged;
  model.line_search_warning = warning;
  model.spec = spec;
  model.information = observed_information(params, data);
  return model;
}

std::vector<double> start_point(std::span<const Lifetime> data, const FitConfig& cfg) {
  const std::size_t p = data.front().n_features();
  if (cfg.init) {
    cfg.init->validate();
    if (cfg.init->n_features() != p) {
      throw dimension_error("init parameters do not match data features");
    }
    return cfg.init->flatten();
  }
  return ModelParams::zeros(p).flatten();
}

}  // namespace

FittedModel fit_coordinate_descent(std::span<const Lifetime> data,
                                   const RegularizedLossSpec& spec,
                                   const FitConfig& cfg) {
  detail::check_data(ModelParams::zeros(data.empty() ? 0 : data.front().n_features()),
                     data);
  const std::vector<double> start = start_point(data, cfg);
  LatentProblem problem(data, spec);
  const std::size_t max_iters = detail::resolve_max_iters(cfg.max_iters, problem.dim());
  CdResult r = minimize_coordinate_descent(problem, start, cfg.epsilon, max_iters,
                                           cfg.line_search_tol);
  return assemble(data, spec, ModelParams::unflatten(r.x), r.value, r.iterations,
                  std::move(r.trace), r.converged, r.line_search_warning);
}

FittedModel fit_reference(std::span<const Lifetime> data,
                          const RegularizedLossSpec& spec, const FitConfig& cfg) {
  detail::check_data(ModelParams::zeros(data.empty() ? 0 : data.front().n_features()),
                     data);
  const std::vector<double> start = start_point(data, cfg);
  Objective obj;
  obj.value = [&](std::span<const double> theta) {
    return regularized_loss(ModelParams::unflatten(theta), data, spec);
  };
  obj.gradient = [&](std::span<const double> theta) {
    return gradient(ModelParams::unflatten(theta), data, spec);
  };
  const std::size_t max_iters = detail::resolve_max_iters(cfg.max_iters, start.size());
  DescentResult r = minimize_gradient_descent(obj, start, cfg.epsilon, max_iters);

  std::vector<TraceEntry> trace;
  trace.reserve(r.objective_trace.size());
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    trace.push_back({start.size(), 0.0, r.objective_trace[i]});
  }
  return assemble(data, spec, ModelParams::unflatten(r.x), r.value, r.iterations,
                  std::move(trace), r.converged, false);
}

}  // namespace lshm
