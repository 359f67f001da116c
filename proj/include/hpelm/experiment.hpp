#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hpelm/activation.hpp"
#include "hpelm/data.hpp"
#include "hpelm/featsel.hpp"
#include "hpelm/model.hpp"

namespace hpelm {

// "all", "top:K", "top:K:f_score" or "top:K:fisher". Without an explicit
// method, top-k uses f_score for two-class data and fisher otherwise.
struct FeaturePolicy {
  std::optional<std::size_t> top_k;
  std::optional<RankingMethod> method;

  static FeaturePolicy parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const FeaturePolicy&, const FeaturePolicy&) = default;
};

struct ExperimentConfig {
  std::string data_path;
  std::string label_column = "label";
  std::optional<std::string> positive_class;  // default: last class in sorted order
  TypeOverrides column_types;
  std::vector<FeaturePolicy> features{FeaturePolicy{}};
  std::vector<LayerSpec> combos;
  std::size_t budget = 2000;  // 0 disables the neuron-budget check
  std::uint64_t seed = 0;
  std::optional<double> ridge;  // unset: relative default
  std::size_t jobs = 1;
  std::size_t block_size = 4096;
  double train_fraction = 0.70;
  std::string out;

  // Throws ConfigError for an empty combo list, a budget mismatch, or
  // out-of-range settings.
  void validate() const;
};

// Applies "key = value" lines (blank lines and '#' comments ignored).
// combo, features and col_type accumulate across lines; keys listed in
// `locked` are skipped so command-line values take precedence.
void apply_config(std::istream& in, ExperimentConfig& config, const std::set<std::string>& locked = {});
void apply_config_file(const std::string& path, ExperimentConfig& config,
                       const std::set<std::string>& locked = {});

struct ReportRow {
  std::string feature_policy;
  std::string priority_list;
  std::string combo;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double train_residual = 0.0;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // non-empty when the row failed
};

struct ExperimentReport {
  std::vector<ReportRow> rows;

  // CSV columns: feature_policy,priority_list,combo,train_accuracy,
  // test_accuracy,train_residual,wall_time_ms,seed,error. Accuracies carry
  // six decimals.
  void write_csv(std::ostream& out) const;
  // Aligned table with four-decimal accuracies.
  void print_table(std::ostream& out) const;
};

// Loaded, split and normalized data shared by every run of an experiment.
struct PreparedData {
  Dataset dataset;
  std::string positive_class;
};

// Reading and filtering: loads the CSV, draws the stratified split and fits
// encoders on the training rows.
PreparedData prepare_data(const ExperimentConfig& config);

// Encoded feature columns chosen by `policy`, ranked on training rows.
std::vector<std::size_t> select_features(const Dataset& dataset, const FeaturePolicy& policy);

// Seed used for grid row `row_index`.
std::uint64_t row_seed(std::uint64_t seed, std::size_t row_index) noexcept;

struct RunResult {
  ElmModel model;
  ReportRow row;
};

// Splitting, training and evaluation for one (feature set, combo) pair.
RunResult run_once(const PreparedData& data, const FeaturePolicy& policy,
                   const std::vector<std::size_t>& features, const LayerSpec& combo,
                   std::uint64_t seed, const ExperimentConfig& config);

// Every policy × combo, in configured order. Rows run on up to
// config.jobs threads; a failing row records its message in `error`.
ExperimentReport run_grid(const ExperimentConfig& config);

}  // namespace hpelm
