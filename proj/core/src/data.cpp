#include "lshm/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string_view>
#include <unordered_set>

#include <json.hpp>

#include "lshm/errors.hpp"
#include "lshm/rng.hpp"

namespace lshm {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool is_missing(const std::string& tok) {
  if (tok.empty()) return true;
  std::string low;
  low.reserve(tok.size());
  for (char c : tok) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return low == "nan" || low == "null" || low == "na";
}

double parse_double(const std::string& tok, const std::string& where) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    throw data_error(where + ": invalid number '" + tok + "'");
  if (!std::isfinite(v)) throw data_error(where + ": non-finite value '" + tok + "'");
  return v;
}

std::size_t parse_index(const std::string& tok, const std::string& where) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + tok.size() || tok.empty() || errno == ERANGE)
    throw data_error(where + ": invalid integer '" + tok + "'");
  return static_cast<std::size_t>(v);
}

struct RawRow {
  std::string id;
  std::string unit;
  std::size_t t = 0;
  int event = 0;
  std::vector<double> features;
};

void close_lifetime(Dataset& ds, std::vector<RawRow>& run,
                    std::unordered_set<std::string>& closed, const std::string& file) {
  if (run.empty()) return;
  const std::string& id = run.front().id;
  if (!closed.insert(id).second)
    throw data_error(file + ": lifetime '" + id + "' appears in more than one block");
  Lifetime life;
  life.id = id;
  life.unit = run.front().unit;
  const std::size_t p = run.front().features.size();
  life.covariates = Matrix(run.size(), p);
  for (std::size_t j = 0; j < run.size(); ++j) {
    const RawRow& r = run[j];
    if (r.t != j + 1)
      throw data_error(file + ": lifetime '" + id + "' has t=" + std::to_string(r.t) +
                       " where t=" + std::to_string(j + 1) + " was expected");
    if (r.unit != life.unit)
      throw data_error(file + ": lifetime '" + id + "' spans more than one unit_id");
    const bool terminal = j + 1 == run.size();
    if (!terminal && r.event != 0)
      throw data_error(file + ": lifetime '" + id + "' has event=" +
                       std::to_string(r.event) + " before its final step");
    if (terminal && r.event != 1 && r.event != 2)
      throw data_error(file + ": lifetime '" + id +
                       "' does not end with event 1 (failure) or 2 (censoring)");
    for (std::size_t k = 0; k < p; ++k) life.covariates(j, k) = r.features[k];
  }
  life.event = run.back().event == 1 ? Event::Failed : Event::Censored;
  ds.lifetimes.push_back(std::move(life));
  run.clear();
}

std::string fold_name(std::size_t f) { return "fold " + std::to_string(f); }

const json& require_key(const json& j, const char* key, const std::string& file) {
  auto it = j.find(key);
  if (it == j.end()) throw data_error(file + ": missing key '" + key + "'");
  return *it;
}

}  // namespace

void Dataset::validate() const {
  std::unordered_set<std::string> names(feature_names.begin(), feature_names.end());
  if (names.size() != feature_names.size())
    throw data_error("duplicate feature names in dataset");
  std::unordered_set<std::string> ids;
  for (const Lifetime& life : lifetimes) {
    life.validate();
    if (life.n_features() != feature_names.size())
      throw data_error("lifetime '" + life.id + "' has " +
                       std::to_string(life.n_features()) + " features, dataset declares " +
                       std::to_string(feature_names.size()));
    if (!ids.insert(life.id).second)
      throw data_error("duplicate lifetime id '" + life.id + "'");
  }
  if (normalized &&
      (normalization.min.size() != feature_names.size() ||
       normalization.max.size() != feature_names.size()))
    throw data_error("normalization stats do not match the feature count");
}

Dataset ingest_csv(const std::filesystem::path& path, const IngestOptions& opts) {
  std::ifstream in(path);
  const std::string file = path.string();
  if (!in) throw data_error("cannot open '" + file + "'");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw data_error(file + ": empty file, expected a lifetime CSV header");
  std::vector<std::string> header = split_csv_line(line);
  static const char* kFixed[4] = {"lifetime_id", "unit_id", "t", "event"};
  if (header.size() < 4)
    throw data_error(file + ": header must start with lifetime_id,unit_id,t,event");
  for (std::size_t i = 0; i < 4; ++i)
    if (header[i] != kFixed[i])
      throw data_error(file + ": header column " + std::to_string(i + 1) + " is '" +
                       header[i] + "', expected '" + kFixed[i] + "'");

  Dataset ds;
  ds.feature_names.assign(header.begin() + 4, header.end());
  for (const std::string& name : ds.feature_names)
    if (name.empty()) throw data_error(file + ": empty feature name in header");
  {
    std::unordered_set<std::string> names(ds.feature_names.begin(), ds.feature_names.end());
    if (names.size() != ds.feature_names.size())
      throw data_error(file + ": duplicate feature name in header");
  }
  if (!opts.expected_features.empty() && ds.feature_names != opts.expected_features) {
    std::string want;
    for (const std::string& n : opts.expected_features) want += (want.empty() ? "" : ",") + n;
    throw data_error(file + ": feature columns do not match the model (expected " + want + ")");
  }

  const std::size_t p = ds.feature_names.size();
  std::unordered_set<std::string> closed;
  std::vector<RawRow> run;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> tok = split_csv_line(line);
    const std::string where = file + ":" + std::to_string(line_no);
    if (tok.size() != 4 + p)
      throw data_error(where + ": expected " + std::to_string(4 + p) + " fields, got " +
                       std::to_string(tok.size()));
    RawRow row;
    row.id = tok[0];
    row.unit = tok[1];
    if (row.id.empty()) throw data_error(where + ": empty lifetime_id");
    if (is_missing(tok[2]) || is_missing(tok[3]))
      throw data_error(where + ": missing value in a required column");
    row.t = parse_index(tok[2], where + " (t)");
    std::size_t ev = parse_index(tok[3], where + " (event)");
    if (ev > 2) throw data_error(where + ": event must be 0, 1 or 2");
    row.event = static_cast<int>(ev);
    row.features.resize(p);
    if (!run.empty() && run.front().id != row.id) close_lifetime(ds, run, closed, file);
    for (std::size_t k = 0; k < p; ++k) {
      const std::string& t = tok[4 + k];
      if (is_missing(t)) {
        if (!opts.forward_fill)
          throw data_error(where + ": missing value for feature '" + ds.feature_names[k] +
                           "' (forward fill is disabled)");
        if (run.empty())
          throw data_error(where + ": missing value for feature '" + ds.feature_names[k] +
                           "' on the first step of lifetime '" + row.id + "'");
        row.features[k] = run.back().features[k];
      } else {
        row.features[k] = parse_double(t, where + " (" + ds.feature_names[k] + ")");
      }
    }
    run.push_back(std::move(row));
  }
  close_lifetime(ds, run, closed, file);
  if (ds.lifetimes.empty()) throw data_error(file + ": no data rows");
  ds.validate();
  return ds;
}

void emit_csv(const Dataset& dataset, const std::filesystem::path& path) {
  dataset.validate();
  auto check_token = [&](const std::string& tok, const char* what) {
    if (tok.find(',') != std::string::npos || tok.find('\n') != std::string::npos ||
        tok != trim(tok))
      throw data_error(std::string(what) + " '" + tok + "' cannot be written to CSV");
  };
  for (const std::string& name : dataset.feature_names) check_token(name, "feature name");

  std::string out = "lifetime_id,unit_id,t,event";
  for (const std::string& name : dataset.feature_names) out += "," + name;
  out += "\n";
  for (const Lifetime& life : dataset.lifetimes) {
    check_token(life.id, "lifetime_id");
    check_token(life.unit, "unit_id");
    const std::size_t t_max = life.length();
    for (std::size_t j = 0; j < t_max; ++j) {
      int event = 0;
      if (j + 1 == t_max) event = life.event == Event::Failed ? 1 : 2;
      out += life.id;
      out += ',';
      out += life.unit;
      out += ',';
      out += std::to_string(j + 1);
      out += ',';
      out += std::to_string(event);
      for (std::size_t k = 0; k < life.n_features(); ++k) {
        out += ',';
        out += detail::format_double(life.covariates(j, k));
      }
      out += '\n';
    }
  }
  detail::write_file_atomic(path, out);
}

Normalization normalization_stats(const Dataset& dataset,
                                  std::span<const std::size_t> train_indices) {
  dataset.validate();
  if (dataset.lifetimes.empty()) throw data_error("cannot compute normalization: no lifetimes");
  std::vector<std::size_t> all;
  if (train_indices.empty()) {
    all.resize(dataset.lifetimes.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    train_indices = all;
  }
  const std::size_t p = dataset.n_features();
  Normalization stats;
  stats.min.assign(p, std::numeric_limits<double>::infinity());
  stats.max.assign(p, -std::numeric_limits<double>::infinity());
  for (std::size_t idx : train_indices) {
    if (idx >= dataset.lifetimes.size())
      throw data_error("train index " + std::to_string(idx) + " out of range");
    const Lifetime& life = dataset.lifetimes[idx];
    for (std::size_t j = 0; j < life.length(); ++j)
      for (std::size_t k = 0; k < p; ++k) {
        stats.min[k] = std::min(stats.min[k], life.covariates(j, k));
        stats.max[k] = std::max(stats.max[k], life.covariates(j, k));
      }
  }
  for (std::size_t k = 0; k < p; ++k)
    if (!(stats.max[k] > stats.min[k]))
      throw data_error("feature '" + dataset.feature_names[k] +
                       "' is constant on the training lifetimes");
  return stats;
}

Dataset normalize(const Dataset& dataset, std::span<const std::size_t> train_indices) {
  return apply_normalization(dataset, normalization_stats(dataset, train_indices));
}

Dataset apply_normalization(const Dataset& dataset, const Normalization& stats) {
  dataset.validate();
  if (dataset.normalized) throw data_error("dataset is already normalized");
  if (stats.empty()) throw data_error("empty normalization stats");
  const std::size_t p = dataset.n_features();
  if (stats.min.size() != p || stats.max.size() != p)
    throw data_error("normalization stats cover " + std::to_string(stats.min.size()) +
                     " features, dataset has " + std::to_string(p));
  for (std::size_t k = 0; k < p; ++k)
    if (!(stats.max[k] > stats.min[k]))
      throw data_error("degenerate normalization range for feature '" +
                       dataset.feature_names[k] + "'");
  Dataset out = dataset;
  for (Lifetime& life : out.lifetimes)
    for (std::size_t j = 0; j < life.length(); ++j)
      for (std::size_t k = 0; k < p; ++k)
        life.covariates(j, k) = (life.covariates(j, k) - stats.min[k]) /
                                (stats.max[k] - stats.min[k]);
  out.normalization = stats;
  out.normalized = true;
  return out;
}

FleetFeatures fleet_features(std::span<const double> snapshot) {
  const std::size_t n = snapshot.size();
  if (n < 2) throw data_error("fleet_features needs at least 2 units");
  for (double v : snapshot)
    if (!std::isfinite(v)) throw data_error("fleet_features: non-finite snapshot value");
  FleetFeatures out;
  out.m1.resize(n);
  out.m2.resize(n);
  double mean = 0.0;
  for (double v : snapshot) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : snapshot) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t larger = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (snapshot[i] < snapshot[j]) ++larger;
    out.m1[i] = std::abs(static_cast<double>(larger) / static_cast<double>(n) - 0.5);
    if (sd > 0.0) out.m2[i] = std::abs(snapshot[i] - mean) / sd;
  }
  return out;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold(
    const Dataset& dataset, std::size_t k, std::uint64_t seed) {
  const std::size_t n = dataset.lifetimes.size();
  if (k == 0) throw std::invalid_argument("kfold: k must be positive");
  if (k > n)
    throw std::invalid_argument("kfold: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(n) + " lifetimes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(i + 1));
    if (j > i) j = i;
    std::swap(order[i], order[j]);
  }
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> folds(k);
  const std::size_t base = n / k;
  const std::size_t rem = n % k;
  std::size_t cursor = 0;
  std::vector<std::size_t> fold_of(n);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < rem ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) fold_of[order[cursor++]] = f;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < k; ++f)
      (f == fold_of[i] ? folds[f].second : folds[f].first).push_back(i);
  for (std::size_t f = 0; f < k; ++f)
    if (folds[f].second.empty()) throw data_error(fold_name(f) + " is empty");
  return folds;
}

StoredModel stored_from_fit(const FittedModel& fit, std::vector<std::string> feature_names,
                            Normalization normalization) {
  if (feature_names.size() != fit.params.n_features())
    throw dimension_error("feature names do not match the fitted parameter count");
  StoredModel m;
  m.model_type = "latent_hazard";
  m.feature_names = std::move(feature_names);
  m.params = fit.params;
  m.c1_alpha = fit.spec.c1_alpha;
  m.c2_beta = fit.spec.c2_beta;
  m.loss = fit.loss;
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  m.information = fit.information;
  m.normalization = std::move(normalization);
  return m;
}

StoredModel stored_from_cox_fit(const CoxFit& fit, const RegularizedLossSpec& spec,
                                std::vector<std::string> feature_names,
                                Normalization normalization) {
  if (feature_names.size() != fit.params.coeffs.size())
    throw dimension_error("feature names do not match the fitted parameter count");
  StoredModel m;
  m.model_type = "cox_weibull";
  m.feature_names = std::move(feature_names);
  m.cox = fit.params;
  m.c1_alpha = spec.c1_alpha;
  m.c2_beta = spec.c2_beta;
  m.loss = fit.loss;
  m.iterations = fit.iterations;
  m.converged = fit.converged;
  m.normalization = std::move(normalization);
  return m;
}

void write_model_json(const StoredModel& model, const std::filesystem::path& path) {
  json j;
  j["model_type"] = model.model_type;
  j["feature_names"] = model.feature_names;
  if (model.model_type == "latent_hazard") {
    j["alpha0"] = model.params.alpha0;
    j["alpha"] = model.params.alpha;
    j["beta0"] = model.params.beta0;
    j["beta"] = model.params.beta;
  } else if (model.model_type == "cox_weibull") {
    j["zeta"] = model.cox.zeta;
    j["eta"] = model.cox.eta;
    j["coeffs"] = model.cox.coeffs;
  } else {
    throw data_error("unknown model_type '" + model.model_type + "'");
  }
  j["c1_alpha"] = model.c1_alpha;
  j["c2_beta"] = model.c2_beta;
  j["loss"] = model.loss;
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  j["information"] = model.information.matrix;
  j["normalization"] = {{"min", model.normalization.min}, {"max", model.normalization.max}};
  detail::write_file_atomic(path, j.dump(2) + "\n");
}

StoredModel read_model_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  const std::string file = path.string();
  if (!in) throw data_error("cannot open '" + file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw data_error(file + ": not valid JSON: " + e.what());
  }
  try {
    StoredModel m;
    m.model_type = require_key(j, "model_type", file).get<std::string>();
    m.feature_names =
        require_key(j, "feature_names", file).get<std::vector<std::string>>();
    const std::size_t p = m.feature_names.size();
    if (m.model_type == "latent_hazard") {
      m.params.alpha0 = require_key(j, "alpha0", file).get<double>();
      m.params.alpha = require_key(j, "alpha", file).get<std::vector<double>>();
      m.params.beta0 = require_key(j, "beta0", file).get<double>();
      m.params.beta = require_key(j, "beta", file).get<std::vector<double>>();
      if (m.params.alpha.size() != p || m.params.beta.size() != p)
        throw data_error(file + ": alpha/beta length does not match feature_names");
    } else if (m.model_type == "cox_weibull") {
      m.cox.zeta = require_key(j, "zeta", file).get<double>();
      m.cox.eta = require_key(j, "eta", file).get<double>();
      m.cox.coeffs = require_key(j, "coeffs", file).get<std::vector<double>>();
      if (m.cox.coeffs.size() != p)
        throw data_error(file + ": coeffs length does not match feature_names");
      m.cox.validate();
    } else {
      throw data_error(file + ": unknown model_type '" + m.model_type + "'");
    }
    m.c1_alpha = require_key(j, "c1_alpha", file).get<double>();
    m.c2_beta = require_key(j, "c2_beta", file).get<double>();
    m.loss = require_key(j, "loss", file).get<double>();
    m.iterations = require_key(j, "iterations", file).get<std::size_t>();
    m.converged = require_key(j, "converged", file).get<bool>();
    m.information.matrix = require_key(j, "information", file).get<std::vector<double>>();
    if (m.model_type == "latent_hazard") {
      const std::size_t dim = m.params.dim();
      if (!m.information.matrix.empty() && m.information.matrix.size() != dim * dim)
        throw data_error(file + ": information matrix is not " + std::to_string(dim) + "x" +
                         std::to_string(dim));
      m.information.dim = m.information.matrix.empty() ? 0 : dim;
    } else if (!m.information.matrix.empty()) {
      throw data_error(file + ": cox_weibull models carry an empty information matrix");
    }
    const json& norm = require_key(j, "normalization", file);
    m.normalization.min = require_key(norm, "min", file).get<std::vector<double>>();
    m.normalization.max = require_key(norm, "max", file).get<std::vector<double>>();
    if (m.normalization.min.size() != m.normalization.max.size() ||
        (!m.normalization.min.empty() && m.normalization.min.size() != p))
      throw data_error(file + ": normalization stats do not match feature_names");
    return m;
  } catch (const json::exception& e) {
    throw data_error(file + ": malformed model document: " + e.what());
  }
}

namespace detail {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw data_error("failed while writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw data_error("cannot move temp file onto '" + path.string() + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

}  // namespace lshm
