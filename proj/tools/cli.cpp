#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lshm/cox.hpp"
#include "lshm/data.hpp"
#include "lshm/decision.hpp"
#include "lshm/errors.hpp"
#include "lshm/evaluation.hpp"
#include "lshm/hazard.hpp"
#include "lshm/optimizer.hpp"
#include "lshm/rng.hpp"
#include "lshm/simulator.hpp"
#include "lshm/types.hpp"

namespace lshm::cli {
namespace {

using nlohmann::json;

// ---- config files -------------------------------------------------------
// Flat key/value JSON; keys are the long flag names without dashes. Values
// given on the command line win.

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw data_error(path + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw data_error(path + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (value.is_object() || value.is_array())
      throw data_error(path + ": config must be flat (key '" + key + "' is not scalar)");
  }
  return j;
}

class Merger {
 public:
  Merger(const CLI::App* sub, const std::string& config_path) : sub_(sub) {
    if (!config_path.empty()) {
      cfg_ = load_config(config_path);
      file_ = config_path;
    }
  }

  template <class T>
  void apply(const std::string& flag, T& var) const {
    const std::string key = flag.substr(2);  // strip leading --
    if (!cfg_.contains(key)) return;
    if (sub_->count(flag) > 0) return;
    try {
      var = cfg_.at(key).get<T>();
    } catch (const json::exception&) {
      throw data_error(file_ + ": config key '" + key + "' has the wrong type");
    }
  }

  // String-typed flags that hold comma lists may also be given as plain
  // numbers in the config.
  void apply_list(const std::string& flag, std::string& var) const {
    const std::string key = flag.substr(2);
    if (!cfg_.contains(key) || sub_->count(flag) > 0) return;
    const json& v = cfg_.at(key);
    if (v.is_string())
      var = v.get<std::string>();
    else if (v.is_number())
      var = v.dump();
    else
      throw data_error(file_ + ": config key '" + key + "' has the wrong type");
  }

  bool provides(const std::string& flag) const { return cfg_.contains(flag.substr(2)); }

 private:
  const CLI::App* sub_;
  json cfg_;
  std::string file_;
};

bool flag_given(const CLI::App* sub, const Merger& merged, const std::string& flag) {
  return sub->count(flag) > 0 || merged.provides(flag);
}

void require_value(const std::string& flag, const std::string& value) {
  if (value.empty()) throw CLI::RequiredError(flag);
}

// ---- small parsers ------------------------------------------------------

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string tok = text.substr(start, comma - start);
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (tok.empty() || end != begin + tok.size() || !std::isfinite(v))
      throw CLI::ValidationError(flag, "'" + text + "' is not a comma list of numbers");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(text, flag)) {
    if (v < 0 || v != std::floor(v))
      throw CLI::ValidationError(flag, "'" + text + "' must list nonnegative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

Criterion parse_criterion(const std::string& name) {
  if (name == "lambda") return Criterion::TotalHazard;
  if (name == "mu") return Criterion::LatentOnly;
  throw CLI::ValidationError("--criterion", "must be 'lambda' or 'mu'");
}

// ---- shared model/data plumbing -----------------------------------------

Dataset load_data(const std::string& path, const StoredModel* model, bool forward_fill) {
  IngestOptions opts;
  opts.forward_fill = forward_fill;
  if (model) opts.expected_features = model->feature_names;
  Dataset ds = ingest_csv(path, opts);
  if (model && !model->normalization.empty())
    ds = apply_normalization(ds, model->normalization);
  return ds;
}

// One criterion trajectory per lifetime under either model type.
std::vector<CriterionSeries> model_series(const StoredModel& model,
                                          std::span<const Lifetime> data,
                                          Criterion criterion) {
  if (model.model_type == "cox_weibull" && criterion == Criterion::LatentOnly)
    throw std::invalid_argument(
        "criterion 'mu' needs a latent_hazard model; the baseline has no latent term");
  std::vector<CriterionSeries> out;
  out.reserve(data.size());
  for (const Lifetime& life : data) {
    if (model.model_type == "latent_hazard") {
      out.push_back(criterion_series(model.params, life, criterion));
    } else {
      out.push_back({life.id, cox_lambda_series(model.cox, life),
                     life.event == Event::Failed});
    }
  }
  return out;
}

Dataset subset_dataset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.feature_names = ds.feature_names;
  out.lifetimes.reserve(indices.size());
  for (std::size_t i : indices) out.lifetimes.push_back(ds.lifetimes[i]);
  return out;
}

std::string fmt(double v) { return detail::format_double(v); }

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  std::string model, out, config;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  double horizon = 0.0;  // 0 keeps each generator's default
  // latent
  std::string preset, alpha_list, beta_list;
  double alpha0 = 0.0, beta0 = 0.0;
  // hmm
  double zeta = 20.0, eta = 4.5, gamma = 1.4;
  std::size_t start_state = 1;
  // bian
  double failure_threshold = 150.0, alpha_mean = 1.0, alpha_sd = 0.0, beta_mean = 1.0,
         beta_sd = 0.0, noise_scale = 1.0, noise_sd = 0.0, step = 1.0;
};

std::size_t integer_horizon(double horizon) {
  if (horizon < 0 || horizon != std::floor(horizon))
    throw CLI::ValidationError("--horizon", "must be a nonnegative integer of steps");
  return static_cast<std::size_t>(horizon);
}

void run_simulate(const CLI::App* sub, SimulateArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--model", a.model);
  merged.apply("--out", a.out);
  merged.apply("--n", a.n);
  merged.apply("--seed", a.seed);
  merged.apply("--horizon", a.horizon);
  merged.apply("--preset", a.preset);
  merged.apply_list("--alpha", a.alpha_list);
  merged.apply_list("--beta", a.beta_list);
  merged.apply("--alpha0", a.alpha0);
  merged.apply("--beta0", a.beta0);
  merged.apply("--zeta", a.zeta);
  merged.apply("--eta", a.eta);
  merged.apply("--gamma", a.gamma);
  merged.apply("--start-state", a.start_state);
  merged.apply("--failure-threshold", a.failure_threshold);
  merged.apply("--alpha-mean", a.alpha_mean);
  merged.apply("--alpha-sd", a.alpha_sd);
  merged.apply("--beta-mean", a.beta_mean);
  merged.apply("--beta-sd", a.beta_sd);
  merged.apply("--noise-scale", a.noise_scale);
  merged.apply("--noise-sd", a.noise_sd);
  merged.apply("--step", a.step);
  require_value("--model", a.model);
  require_value("--out", a.out);
  if (a.n == 0) throw CLI::ValidationError("--n", "must be >= 1");

  Dataset ds;
  if (a.model == "latent") {
    ModelParams params;
    const bool explicit_params =
        flag_given(sub, merged, "--alpha0") || flag_given(sub, merged, "--beta0") ||
        flag_given(sub, merged, "--alpha") || flag_given(sub, merged, "--beta");
    if (explicit_params) {
      if (!(flag_given(sub, merged, "--alpha0") && flag_given(sub, merged, "--beta0") &&
            flag_given(sub, merged, "--alpha") && flag_given(sub, merged, "--beta")))
        throw CLI::ValidationError(
            "simulate", "give all of --alpha0/--alpha/--beta0/--beta, or use --preset");
      params.alpha0 = a.alpha0;
      params.beta0 = a.beta0;
      params.alpha = parse_double_list(a.alpha_list, "--alpha");
      params.beta = parse_double_list(a.beta_list, "--beta");
      if (params.alpha.size() != params.beta.size())
        throw CLI::ValidationError("simulate", "--alpha and --beta must be equally long");
    } else if (a.preset == "sec61") {
      params.alpha0 = -14.0;
      params.alpha = {5.0};
      params.beta0 = -7.0;
      params.beta = {0.5};
    } else if (a.preset.empty()) {
      throw CLI::ValidationError(
          "simulate", "latent simulation needs --preset or explicit parameters");
    } else {
      throw CLI::ValidationError("--preset", "unknown preset '" + a.preset + "'");
    }
    SimConfig cfg;
    cfg.true_params = params;
    cfg.n_lifetimes = a.n;
    cfg.horizon = integer_horizon(a.horizon);
    cfg.seed = a.seed;
    ds.lifetimes = simulate_dataset(cfg);
    for (std::size_t k = 0; k < params.n_features(); ++k)
      ds.feature_names.push_back("x" + std::to_string(k + 1));
  } else if (a.model == "hmm") {
    HmmConfig cfg;
    cfg.zeta = a.zeta;
    cfg.eta = a.eta;
    cfg.gamma = a.gamma;
    if (a.start_state < 1 || a.start_state > 3)
      throw CLI::ValidationError("--start-state", "must be 1, 2 or 3");
    cfg.start_state = static_cast<int>(a.start_state);
    if (a.horizon != 0) cfg.horizon = integer_horizon(a.horizon);
    cfg.seed = a.seed;
    for (HmmLifetime& hl : simulate_hmm_dataset(cfg, a.n))
      ds.lifetimes.push_back(std::move(hl.life));
    ds.feature_names = {"log_t", "y"};
  } else if (a.model == "bian") {
    BianConfig cfg;
    cfg.failure_threshold = a.failure_threshold;
    cfg.alpha_mean = a.alpha_mean;
    cfg.alpha_sd = a.alpha_sd;
    cfg.beta_mean = a.beta_mean;
    cfg.beta_sd = a.beta_sd;
    cfg.noise_scale = a.noise_scale;
    cfg.noise_sd = a.noise_sd;
    cfg.step = a.step;
    if (a.horizon != 0) cfg.horizon = a.horizon;
    cfg.seed = a.seed;
    cfg.validate();
    for (std::size_t i = 0; i < a.n; ++i) {
      Rng rng = Rng::for_stream(cfg.seed, i);
      char id[16];
      std::snprintf(id, sizeof id, "sim-%05zu", i + 1);
      ds.lifetimes.push_back(bian_to_lifetime(sample_bian_signal(cfg, rng), id));
    }
    ds.feature_names = {"signal", "environment"};
  } else {
    throw CLI::ValidationError("--model", "must be 'latent', 'hmm' or 'bian'");
  }

  std::size_t failed = 0;
  for (const Lifetime& life : ds.lifetimes) failed += life.event == Event::Failed;
  emit_csv(ds, a.out);
  std::cout << "simulate: wrote " << ds.lifetimes.size() << " lifetimes (" << failed
            << " failed, " << ds.lifetimes.size() - failed << " censored) to " << a.out
            << "\n";
}

// ---- fit ------------------------------------------------------------------

struct FitArgs {
  std::string data, out, config;
  std::string model_type = "latent";
  std::string init = "moment";
  double penalty_alpha = 0.0, penalty_beta = 0.0;
  double epsilon = 1e-8;
  std::size_t max_iters = 0;
  bool penalize_intercepts = false, normalize = false, forward_fill = false;
};

void run_fit(const CLI::App* sub, FitArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--data", a.data);
  merged.apply("--out", a.out);
  merged.apply("--model-type", a.model_type);
  merged.apply("--init", a.init);
  merged.apply("--penalty-alpha", a.penalty_alpha);
  merged.apply("--penalty-beta", a.penalty_beta);
  merged.apply("--epsilon", a.epsilon);
  merged.apply("--max-iters", a.max_iters);
  merged.apply("--penalize-intercepts", a.penalize_intercepts);
  merged.apply("--normalize", a.normalize);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--data", a.data);
  require_value("--out", a.out);
  if (a.model_type != "latent" && a.model_type != "cox")
    throw CLI::ValidationError("--model-type", "must be 'latent' or 'cox'");
  if (a.init != "moment" && a.init != "zero")
    throw CLI::ValidationError("--init", "must be 'moment' or 'zero'");

  Dataset ds = load_data(a.data, nullptr, a.forward_fill);
  Normalization norm;
  if (a.normalize) {
    norm = normalization_stats(ds, {});
    ds = apply_normalization(ds, norm);
  }

  RegularizedLossSpec spec;
  spec.c1_alpha = a.penalty_alpha;
  spec.c2_beta = a.penalty_beta;
  spec.penalize_intercepts = a.penalize_intercepts;
  FitConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.max_iters = a.max_iters;

  StoredModel stored;
  if (a.model_type == "latent") {
    if (a.init == "moment") cfg.init = moment_init(ds.lifetimes);
    FittedModel fit = fit_coordinate_descent(ds.lifetimes, spec, cfg);
    stored = stored_from_fit(fit, ds.feature_names, norm);
  } else {
    CoxFit fit = fit_cox(ds.lifetimes, spec, cfg);
    stored = stored_from_cox_fit(fit, spec, ds.feature_names, norm);
  }
  write_model_json(stored, a.out);
  std::cout << "fit: type=" << stored.model_type << " loss=" << fmt(stored.loss)
            << " iterations=" << stored.iterations
            << " converged=" << (stored.converged ? "yes" : "no") << " out=" << a.out
            << "\n";
  if (!stored.converged)
    std::cerr << "fit: warning: stopped at the iteration cap before converging\n";
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model, data, out, config;
  bool forward_fill = false;
};

void run_predict(const CLI::App* sub, PredictArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--model", a.model);
  merged.apply("--data", a.data);
  merged.apply("--out", a.out);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--model", a.model);
  require_value("--data", a.data);
  require_value("--out", a.out);

  const StoredModel model = read_model_json(a.model);
  const Dataset ds = load_data(a.data, &model, a.forward_fill);

  std::string out = "lifetime_id,t,mu,g,lambda\n";
  std::size_t rows = 0;
  for (const Lifetime& life : ds.lifetimes) {
    if (model.model_type == "latent_hazard") {
      const HazardTrajectory traj = trajectory(model.params, life);
      for (std::size_t j = 0; j < traj.size(); ++j) {
        out += life.id + "," + std::to_string(j + 1) + "," + fmt(traj.mu[j]) + "," +
               fmt(traj.g[j]) + "," + fmt(traj.lambda[j]) + "\n";
        ++rows;
      }
    } else {
      const std::vector<double> lam = cox_lambda_series(model.cox, life);
      for (std::size_t j = 0; j < lam.size(); ++j) {
        out += life.id + "," + std::to_string(j + 1) + ",,," + fmt(lam[j]) + "\n";
        ++rows;
      }
    }
  }
  detail::write_file_atomic(a.out, out);
  std::cout << "predict: wrote " << rows << " rows for " << ds.lifetimes.size()
            << " lifetimes to " << a.out << "\n";
}

// ---- warn -------------------------------------------------------------------

struct WarnArgs {
  std::string model, data, out, report, config;
  std::string criterion = "lambda";
  std::size_t d = 5;
  double c1 = 1.0, c2 = 1.0;
  bool include_censored = false, forward_fill = false;
};

void run_warn(const CLI::App* sub, WarnArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--model", a.model);
  merged.apply("--data", a.data);
  merged.apply("--out", a.out);
  merged.apply("--report", a.report);
  merged.apply("--criterion", a.criterion);
  merged.apply("--d", a.d);
  merged.apply("--c1", a.c1);
  merged.apply("--c2", a.c2);
  merged.apply("--include-censored", a.include_censored);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--model", a.model);
  require_value("--data", a.data);
  require_value("--out", a.out);
  const Criterion criterion = parse_criterion(a.criterion);
  CostSpec cost;
  cost.d = a.d;
  cost.c1 = a.c1;
  cost.c2 = a.c2;
  cost.validate();

  const StoredModel model = read_model_json(a.model);
  const Dataset ds = load_data(a.data, &model, a.forward_fill);
  const std::vector<CriterionSeries> series = model_series(model, ds.lifetimes, criterion);
  const ThresholdFit tf = optimize_threshold(series, cost, a.include_censored);

  double warn_at_failure_total = 0.0;
  for (const CriterionSeries& s : series) {
    if (s.values.size() < cost.d) continue;
    if (s.failed)
      warn_at_failure_total += pinball_cost(cost, 0.0);
    // a censored lifetime "warned" at its last step carries no early cost
  }

  const bool never = std::isinf(tf.threshold);
  json j;
  j["criterion"] = a.criterion;
  j["d"] = cost.d;
  j["c1"] = cost.c1;
  j["c2"] = cost.c2;
  j["include_censored"] = a.include_censored;
  j["threshold"] = never ? json() : json(tf.threshold);
  j["never_warn"] = never;
  j["risk"] = tf.risk;
  j["n_eligible"] = tf.n_eligible;
  j["warn_at_failure_total"] = warn_at_failure_total;
  detail::write_file_atomic(a.out, j.dump(2) + "\n");

  if (!a.report.empty()) {
    std::string csv = "lifetime_id,event,length,warning_step,xi,cost\n";
    for (const CriterionSeries& s : series) {
      if (s.values.size() < cost.d) continue;
      if (!s.failed && !a.include_censored) continue;
      const std::size_t r = first_crossing(s.values, tf.threshold);
      const double observed = static_cast<double>(s.values.size());
      const double xi = observed - static_cast<double>(r);
      const double row_cost =
          s.failed ? pinball_cost(cost, xi)
                   : cost.c2 * std::max(0.0, xi - static_cast<double>(cost.d));
      csv += s.id + std::string(",") + (s.failed ? "failed" : "censored") + "," +
             std::to_string(s.values.size()) + "," + std::to_string(r) + "," + fmt(xi) +
             "," + fmt(row_cost) + "\n";
    }
    detail::write_file_atomic(a.report, csv);
  }
  std::cout << "warn: threshold=" << (never ? "never" : fmt(tf.threshold))
            << " risk=" << fmt(tf.risk) << " eligible=" << tf.n_eligible
            << " out=" << a.out << "\n";
}

// ---- tradeoff ----------------------------------------------------------------

struct TradeoffArgs {
  std::string model, data, out, config;
  std::string criterion = "lambda";
  bool forward_fill = false;
};

void run_tradeoff(const CLI::App* sub, TradeoffArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--model", a.model);
  merged.apply("--data", a.data);
  merged.apply("--out", a.out);
  merged.apply("--criterion", a.criterion);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--model", a.model);
  require_value("--data", a.data);
  require_value("--out", a.out);
  const Criterion criterion = parse_criterion(a.criterion);

  const StoredModel model = read_model_json(a.model);
  const Dataset ds = load_data(a.data, &model, a.forward_fill);
  const std::vector<CriterionSeries> series = model_series(model, ds.lifetimes, criterion);
  const std::vector<double> sweep = default_threshold_sweep(series);
  const std::vector<TradeoffPoint> curve = tradeoff_curve(series, sweep);

  std::string csv = "threshold,pct_missing_operating_time,pct_unexpected_failures\n";
  for (const TradeoffPoint& pt : curve)
    csv += fmt(pt.threshold) + "," + fmt(pt.pct_missing_operating_time) + "," +
           fmt(pt.pct_unexpected_failures) + "\n";
  detail::write_file_atomic(a.out, csv);
  std::cout << "tradeoff: " << curve.size() << " thresholds to " << a.out << "\n";
}

// ---- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string model, data, out, config;
  std::string criterion = "lambda";
  std::string offsets = "0";
  bool forward_fill = false;
};

void run_evaluate(const CLI::App* sub, EvaluateArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--model", a.model);
  merged.apply("--data", a.data);
  merged.apply("--out", a.out);
  merged.apply("--criterion", a.criterion);
  merged.apply_list("--offsets", a.offsets);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--model", a.model);
  require_value("--data", a.data);
  require_value("--out", a.out);
  const Criterion criterion = parse_criterion(a.criterion);
  const std::vector<std::size_t> offsets = parse_index_list(a.offsets, "--offsets");

  const StoredModel model = read_model_json(a.model);
  const Dataset ds = load_data(a.data, &model, a.forward_fill);
  const std::vector<CriterionSeries> lambda_series =
      model_series(model, ds.lifetimes, Criterion::TotalHazard);
  const std::vector<double> residuals = residuals_from_lambda(lambda_series);
  const KsResult ks = ks_test_exp1(residuals);
  const std::vector<CriterionSeries> rank_series =
      criterion == Criterion::TotalHazard ? lambda_series
                                          : model_series(model, ds.lifetimes, criterion);
  const RankReport ranks = rank_from_series(rank_series, offsets);

  std::string csv = "record,lifetime_id,eval_offset,value,extra\n";
  // residuals come back in lifetime-id order; re-derive the ids the same way
  {
    std::vector<const CriterionSeries*> failed;
    for (const CriterionSeries& s : lambda_series)
      if (s.failed) failed.push_back(&s);
    std::stable_sort(failed.begin(), failed.end(),
                     [](const CriterionSeries* x, const CriterionSeries* y) {
                       return x->id < y->id;
                     });
    for (std::size_t i = 0; i < failed.size(); ++i)
      csv += "cox_snell," + failed[i]->id + ",," + fmt(residuals[i]) + ",\n";
  }
  csv += "ks,,," + fmt(ks.d) + "," + fmt(ks.p_value) + "\n";
  for (const RankRecord& rec : ranks.records)
    csv += "rank," + rec.lifetime_id + "," + std::to_string(rec.eval_offset) + "," +
           fmt(rec.percentile) + "," + std::to_string(rec.cohort_size) + "\n";
  for (const std::string& id : ranks.skipped) csv += "rank_skipped," + id + ",,,\n";
  detail::write_file_atomic(a.out, csv);
  std::cout << "evaluate: residuals=" << ks.n << " ks_d=" << fmt(ks.d)
            << " ks_p=" << fmt(ks.p_value) << " out=" << a.out << "\n";
}

// ---- compare --------------------------------------------------------------------

struct CompareArgs {
  std::string data, train, test, out, config;
  std::string criterion = "lambda";
  std::string init = "moment";
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t d = 5;
  double c1 = 1.0, c2 = 1.0;
  double penalty_alpha = 0.0, penalty_beta = 0.0;
  double epsilon = 1e-8;
  std::size_t max_iters = 0;
  bool include_censored = false, normalize = false, forward_fill = false;
};

void run_compare(const CLI::App* sub, CompareArgs& a) {
  Merger merged(sub, a.config);
  merged.apply("--data", a.data);
  merged.apply("--train", a.train);
  merged.apply("--test", a.test);
  merged.apply("--out", a.out);
  merged.apply("--criterion", a.criterion);
  merged.apply("--init", a.init);
  merged.apply("--folds", a.folds);
  merged.apply("--seed", a.seed);
  merged.apply("--d", a.d);
  merged.apply("--c1", a.c1);
  merged.apply("--c2", a.c2);
  merged.apply("--penalty-alpha", a.penalty_alpha);
  merged.apply("--penalty-beta", a.penalty_beta);
  merged.apply("--epsilon", a.epsilon);
  merged.apply("--max-iters", a.max_iters);
  merged.apply("--include-censored", a.include_censored);
  merged.apply("--normalize", a.normalize);
  merged.apply("--forward-fill", a.forward_fill);
  require_value("--out", a.out);
  if (a.init != "moment" && a.init != "zero")
    throw CLI::ValidationError("--init", "must be 'moment' or 'zero'");
  const Criterion criterion = parse_criterion(a.criterion);
  CostSpec cost;
  cost.d = a.d;
  cost.c1 = a.c1;
  cost.c2 = a.c2;
  cost.validate();

  const bool split_mode = !a.train.empty() || !a.test.empty();
  if (split_mode && (a.train.empty() || a.test.empty()))
    throw CLI::ValidationError("compare", "--train and --test must be given together");
  if (split_mode && !a.data.empty())
    throw CLI::ValidationError("compare", "--data cannot be combined with --train/--test");
  if (!split_mode) require_value("--data", a.data);
  if (!split_mode && a.folds < 2)
    throw CLI::ValidationError("--folds", "must be >= 2");

  std::vector<std::pair<Dataset, Dataset>> splits;
  if (split_mode) {
    Dataset train = ingest_csv(a.train, {{}, a.forward_fill});
    Dataset test = ingest_csv(a.test, {train.feature_names, a.forward_fill});
    splits.emplace_back(std::move(train), std::move(test));
  } else {
    Dataset all = ingest_csv(a.data, {{}, a.forward_fill});
    for (auto& [train_idx, test_idx] : kfold(all, a.folds, a.seed))
      splits.emplace_back(subset_dataset(all, train_idx), subset_dataset(all, test_idx));
  }

  RegularizedLossSpec spec;
  spec.c1_alpha = a.penalty_alpha;
  spec.c2_beta = a.penalty_beta;
  FitConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.max_iters = a.max_iters;

  const std::vector<std::string> names = {"latent_hazard", "cox_weibull"};
  std::vector<std::string> row_order;
  std::map<std::string, double> totals;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, double> split_threshold;

  for (auto& [train, test] : splits) {
    Dataset fit_train = train;
    Dataset fit_test = test;
    if (a.normalize) {
      const Normalization norm = normalization_stats(train, {});
      fit_train = apply_normalization(train, norm);
      fit_test = apply_normalization(test, norm);
    }
    if (a.init == "moment") cfg.init = moment_init(fit_train.lifetimes);
    const FittedModel latent = fit_coordinate_descent(fit_train.lifetimes, spec, cfg);
    const CoxFit cox = fit_cox(fit_train.lifetimes, spec, cfg);
    const StoredModel latent_stored = stored_from_fit(latent, fit_train.feature_names, {});
    const StoredModel cox_stored =
        stored_from_cox_fit(cox, spec, fit_train.feature_names, {});

    std::vector<std::vector<CriterionSeries>> train_series;
    train_series.push_back(model_series(latent_stored, fit_train.lifetimes, criterion));
    train_series.push_back(
        model_series(cox_stored, fit_train.lifetimes, Criterion::TotalHazard));
    std::vector<double> thresholds;
    for (const std::vector<CriterionSeries>& s : train_series)
      thresholds.push_back(optimize_threshold(s, cost, a.include_censored).threshold);

    std::vector<std::vector<CriterionSeries>> test_series;
    test_series.push_back(model_series(latent_stored, fit_test.lifetimes, criterion));
    test_series.push_back(
        model_series(cox_stored, fit_test.lifetimes, Criterion::TotalHazard));

    for (const CostRow& row : cost_comparison(names, test_series, thresholds, cost)) {
      if (totals.find(row.model) == totals.end()) row_order.push_back(row.model);
      totals[row.model] += row.total_cost;
      counts[row.model] += row.n_lifetimes;
      split_threshold[row.model] = row.threshold;
    }
  }

  std::string csv = "model,threshold,total_cost,n_lifetimes\n";
  std::string summary;
  for (const std::string& name : row_order) {
    const bool has_threshold = splits.size() == 1 && name != "warn_at_failure";
    csv += name + "," + (has_threshold ? fmt(split_threshold[name]) : std::string()) +
           "," + fmt(totals[name]) + "," + std::to_string(counts[name]) + "\n";
    summary += " " + name + "=" + fmt(totals[name]);
  }
  detail::write_file_atomic(a.out, csv);
  std::cout << "compare:" << summary << " out=" << a.out << "\n";
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"latent state hazard modeling toolkit"};
  app.require_subcommand(1);

  auto sim = std::make_shared<SimulateArgs>();
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "generate a lifetime CSV from a chosen generator");
  sim_cmd->add_option("--model", sim->model, "generator: latent, hmm or bian");
  sim_cmd->add_option("--out", sim->out, "output lifetime CSV");
  sim_cmd->add_option("--n", sim->n, "number of lifetimes");
  sim_cmd->add_option("--seed", sim->seed, "random seed");
  sim_cmd->add_option("--horizon", sim->horizon,
                      "censoring horizon (0 keeps the generator default)");
  sim_cmd->add_option("--preset", sim->preset, "named latent parameter set (sec61)");
  sim_cmd->add_option("--alpha0", sim->alpha0, "latent: transient intercept");
  sim_cmd->add_option("--alpha", sim->alpha_list, "latent: transient weights, comma list");
  sim_cmd->add_option("--beta0", sim->beta0, "latent: degradation intercept");
  sim_cmd->add_option("--beta", sim->beta_list, "latent: degradation weights, comma list");
  sim_cmd->add_option("--zeta", sim->zeta, "hmm: Weibull shape");
  sim_cmd->add_option("--eta", sim->eta, "hmm: Weibull scale");
  sim_cmd->add_option("--gamma", sim->gamma, "hmm: state weight in the hazard");
  sim_cmd->add_option("--start-state", sim->start_state, "hmm: initial state (1..3)");
  sim_cmd->add_option("--failure-threshold", sim->failure_threshold,
                      "bian: signal level that fails the unit");
  sim_cmd->add_option("--alpha-mean", sim->alpha_mean, "bian: intercept mean");
  sim_cmd->add_option("--alpha-sd", sim->alpha_sd, "bian: intercept sd");
  sim_cmd->add_option("--beta-mean", sim->beta_mean, "bian: drift coefficient mean");
  sim_cmd->add_option("--beta-sd", sim->beta_sd, "bian: drift coefficient sd");
  sim_cmd->add_option("--noise-scale", sim->noise_scale, "bian: Brownian coefficient mean");
  sim_cmd->add_option("--noise-sd", sim->noise_sd, "bian: Brownian coefficient sd");
  sim_cmd->add_option("--step", sim->step, "bian: grid step");
  sim_cmd->add_option("--config", sim->config, "flat JSON config file");
  sim_cmd->callback([sim, sim_cmd] { run_simulate(sim_cmd, *sim); });

  auto fit = std::make_shared<FitArgs>();
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model to a lifetime CSV");
  fit_cmd->add_option("--data", fit->data, "training lifetime CSV");
  fit_cmd->add_option("--out", fit->out, "output model JSON");
  fit_cmd->add_option("--model-type", fit->model_type, "latent (default) or cox");
  fit_cmd->add_option("--init", fit->init,
                      "starting point: moment (default, scale-matched intercepts) or zero");
  fit_cmd->add_option("--penalty-alpha", fit->penalty_alpha,
                      "ridge penalty on the transient weights");
  fit_cmd->add_option("--penalty-beta", fit->penalty_beta,
                      "ridge penalty on the degradation weights");
  fit_cmd->add_option("--epsilon", fit->epsilon, "convergence tolerance on the loss");
  fit_cmd->add_option("--max-iters", fit->max_iters,
                      "iteration cap (0 = 50x parameter count)");
  fit_cmd->add_flag("--penalize-intercepts", fit->penalize_intercepts,
                    "include intercepts in the ridge penalty");
  fit_cmd->add_flag("--normalize", fit->normalize,
                    "min-max scale features; stats are stored in the model");
  fit_cmd->add_flag("--forward-fill", fit->forward_fill,
                    "fill missing feature values from the previous step");
  fit_cmd->add_option("--config", fit->config, "flat JSON config file");
  fit_cmd->callback([fit, fit_cmd] { run_fit(fit_cmd, *fit); });

  auto pred = std::make_shared<PredictArgs>();
  CLI::App* pred_cmd =
      app.add_subcommand("predict", "per-step hazard decomposition under a stored model");
  pred_cmd->add_option("--model", pred->model, "model JSON from fit");
  pred_cmd->add_option("--data", pred->data, "lifetime CSV to score");
  pred_cmd->add_option("--out", pred->out, "output CSV (lifetime_id,t,mu,g,lambda)");
  pred_cmd->add_flag("--forward-fill", pred->forward_fill,
                     "fill missing feature values from the previous step");
  pred_cmd->add_option("--config", pred->config, "flat JSON config file");
  pred_cmd->callback([pred, pred_cmd] { run_predict(pred_cmd, *pred); });

  auto warn = std::make_shared<WarnArgs>();
  CLI::App* warn_cmd =
      app.add_subcommand("warn", "train a warning threshold by empirical risk");
  warn_cmd->add_option("--model", warn->model, "model JSON from fit");
  warn_cmd->add_option("--data", warn->data, "training lifetime CSV");
  warn_cmd->add_option("--out", warn->out, "output threshold JSON");
  warn_cmd->add_option("--report", warn->report, "optional per-lifetime cost CSV");
  warn_cmd->add_option("--criterion", warn->criterion,
                       "warning criterion: lambda (total) or mu (latent only)");
  warn_cmd->add_option("--d", warn->d, "ideal warning lead, steps before failure");
  warn_cmd->add_option("--c1", warn->c1, "cost slope per step of late warning");
  warn_cmd->add_option("--c2", warn->c2, "cost slope per step of early warning");
  warn_cmd->add_flag("--include-censored", warn->include_censored,
                     "let censored lifetimes contribute early-warning cost");
  warn_cmd->add_flag("--forward-fill", warn->forward_fill,
                     "fill missing feature values from the previous step");
  warn_cmd->add_option("--config", warn->config, "flat JSON config file");
  warn_cmd->callback([warn, warn_cmd] { run_warn(warn_cmd, *warn); });

  auto trade = std::make_shared<TradeoffArgs>();
  CLI::App* trade_cmd = app.add_subcommand(
      "tradeoff", "missing-operating-time vs unexpected-failure curve over thresholds");
  trade_cmd->add_option("--model", trade->model, "model JSON from fit");
  trade_cmd->add_option("--data", trade->data, "lifetime CSV");
  trade_cmd->add_option("--out", trade->out, "output curve CSV");
  trade_cmd->add_option("--criterion", trade->criterion, "lambda or mu");
  trade_cmd->add_flag("--forward-fill", trade->forward_fill,
                      "fill missing feature values from the previous step");
  trade_cmd->add_option("--config", trade->config, "flat JSON config file");
  trade_cmd->callback([trade, trade_cmd] { run_tradeoff(trade_cmd, *trade); });

  auto eval = std::make_shared<EvaluateArgs>();
  CLI::App* eval_cmd = app.add_subcommand(
      "evaluate", "goodness-of-fit: Cox-Snell residuals, K-S test, hazard ranks");
  eval_cmd->add_option("--model", eval->model, "model JSON from fit");
  eval_cmd->add_option("--data", eval->data, "lifetime CSV");
  eval_cmd->add_option("--out", eval->out, "output report CSV");
  eval_cmd->add_option("--criterion", eval->criterion, "rank criterion: lambda or mu");
  eval_cmd->add_option("--offsets", eval->offsets,
                       "comma list of steps before failure to rank at");
  eval_cmd->add_flag("--forward-fill", eval->forward_fill,
                     "fill missing feature values from the previous step");
  eval_cmd->add_option("--config", eval->config, "flat JSON config file");
  eval_cmd->callback([eval, eval_cmd] { run_evaluate(eval_cmd, *eval); });

  auto cmp = std::make_shared<CompareArgs>();
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "latent vs cox warning costs under cross-validation or a fixed split");
  cmp_cmd->add_option("--data", cmp->data, "lifetime CSV for k-fold cross-validation");
  cmp_cmd->add_option("--train", cmp->train, "training CSV (with --test)");
  cmp_cmd->add_option("--test", cmp->test, "test CSV (with --train)");
  cmp_cmd->add_option("--out", cmp->out, "output cost table CSV");
  cmp_cmd->add_option("--criterion", cmp->criterion,
                      "latent warning criterion: lambda or mu");
  cmp_cmd->add_option("--folds", cmp->folds, "fold count for --data mode");
  cmp_cmd->add_option("--seed", cmp->seed, "fold assignment seed");
  cmp_cmd->add_option("--d", cmp->d, "ideal warning lead, steps before failure");
  cmp_cmd->add_option("--c1", cmp->c1, "cost slope per step of late warning");
  cmp_cmd->add_option("--c2", cmp->c2, "cost slope per step of early warning");
  cmp_cmd->add_option("--penalty-alpha", cmp->penalty_alpha,
                      "ridge penalty on the transient weights");
  cmp_cmd->add_option("--penalty-beta", cmp->penalty_beta,
                      "ridge penalty on the degradation weights");
  cmp_cmd->add_option("--epsilon", cmp->epsilon, "fit tolerance");
  cmp_cmd->add_option("--max-iters", cmp->max_iters, "fit iteration cap");
  cmp_cmd->add_option("--init", cmp->init,
                      "latent fit starting point: moment (default) or zero");
  cmp_cmd->add_flag("--include-censored", cmp->include_censored,
                    "let censored lifetimes contribute early-warning cost");
  cmp_cmd->add_flag("--normalize", cmp->normalize,
                    "min-max scale features with train-fold stats");
  cmp_cmd->add_flag("--forward-fill", cmp->forward_fill,
                    "fill missing feature values from the previous step");
  cmp_cmd->add_option("--config", cmp->config, "flat JSON config file");
  cmp_cmd->callback([cmp, cmp_cmd] { run_compare(cmp_cmd, *cmp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const numeric_range_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lshm");
  for (const std::string& s : args) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lshm::cli
