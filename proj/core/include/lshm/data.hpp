#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lshm/cox.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/optimizer.hpp"
#include "lshm/types.hpp"

namespace lshm {

// Per-feature min/max the covariates were scaled by; empty means raw data.
struct Normalization {
  std::vector<double> min;
  std::vector<double> max;

  bool empty() const { return min.empty(); }
};

struct Dataset {
  std::vector<Lifetime> lifetimes;
  std::vector<std::string> feature_names;
  Normalization normalization;
  bool normalized = false;

  std::size_t n_features() const { return feature_names.size(); }
  void validate() const;
};

struct IngestOptions {
  std::vector<std::string> expected_features;  // header must match when nonempty
  bool forward_fill = false;  // fill missing fields from the previous step
};

// Lifetime CSV: header `lifetime_id,unit_id,t,event,<features...>`, one row
// per step, t contiguous from 1 within each lifetime, event 0 everywhere
// except the terminal row (1 failure, 2 censoring). Rows of one lifetime
// must be consecutive. Missing fields are rejected unless forward_fill is
// set (never for a lifetime's first step). Throws data_error with the file
// and lifetime named.
Dataset ingest_csv(const std::filesystem::path& path, const IngestOptions& opts = {});

// Inverse of ingest_csv; values serialized with 17 significant digits so a
// round trip is bit exact. Writes are atomic (temp file + rename).
void emit_csv(const Dataset& dataset, const std::filesystem::path& path);

// Min/max per feature over the training lifetimes (every lifetime when
// train_indices is empty). Throws data_error on a constant feature.
Normalization normalization_stats(const Dataset& dataset,
                                  std::span<const std::size_t> train_indices);

// Rescales every covariate to (x - min) / (max - min) using stats learned
// on the training lifetimes; values outside the training range map outside
// [0, 1] unclipped. Throws data_error when the dataset is already
// normalized.
Dataset normalize(const Dataset& dataset, std::span<const std::size_t> train_indices);

// Applies previously learned stats (e.g. from a stored model) unchanged.
Dataset apply_normalization(const Dataset& dataset, const Normalization& stats);

struct FleetFeatures {
  std::vector<double> m1;                 // | rank fraction - 0.5 |, in [0, 0.5]
  std::vector<std::optional<double>> m2;  // |z-score|, null when sd is zero
};

// Cross-fleet snapshot features for one (feature, time): for each unit,
// M1 = |#{units with larger value} / n - 0.5| and M2 = |x - mean| / sd
// (sample sd, n-1). Needs n >= 2.
FleetFeatures fleet_features(std::span<const double> snapshot);

// Random partition of lifetime indices into k near-equal folds,
// deterministic under seed; returns (train, test) index pairs per fold,
// each sorted ascending. Throws std::invalid_argument when k == 0 or k > N.
std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold(
    const Dataset& dataset, std::size_t k, std::uint64_t seed);

// On-disk model document. model_type "latent_hazard" uses params;
// "cox_weibull" uses cox (and an empty information matrix).
struct StoredModel {
  std::string model_type;
  std::vector<std::string> feature_names;
  ModelParams params;
  CoxParams cox;
  double c1_alpha = 0.0;
  double c2_beta = 0.0;
  double loss = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  ObservedInformation information;
  Normalization normalization;
};

StoredModel stored_from_fit(const FittedModel& fit,
                            std::vector<std::string> feature_names,
                            Normalization normalization);

StoredModel stored_from_cox_fit(const CoxFit& fit, const RegularizedLossSpec& spec,
                                std::vector<std::string> feature_names,
                                Normalization normalization);

// Atomic write / validated read of the model JSON schema. read throws
// data_error on malformed or incomplete documents, naming the file.
void write_model_json(const StoredModel& model, const std::filesystem::path& path);
StoredModel read_model_json(const std::filesystem::path& path);

namespace detail {

// Shared atomic file write (temp + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// 17 significant digits, round-trip exact.
std::string format_double(double v);

}  // namespace detail

}  // namespace lshm
