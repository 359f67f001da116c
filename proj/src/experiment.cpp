#include "hpelm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "hpelm/csv.hpp"
#include "hpelm/error.hpp"
#include "hpelm/rng.hpp"

namespace hpelm {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": '" + std::string(text) + "' is not a valid number");
  }
  return value;
}

std::optional<double> parse_ridge(std::string_view text) {
  if (text == "auto") return std::nullopt;
  const double r = parse_number<double>("ridge", text);
  if (!(r >= 0.0)) throw ConfigError("ridge must be non-negative");
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

FeaturePolicy FeaturePolicy::parse(std::string_view text) {
  const std::string t = trim(text);
  if (t == "all") return {};
  if (t.rfind("top:", 0) != 0) {
    throw ConfigError("feature policy '" + t + "' must be all, top:K, top:K:f_score or top:K:fisher");
  }
  std::string_view rest = std::string_view(t).substr(4);
  FeaturePolicy p;
  const auto colon = rest.find(':');
  p.top_k = parse_number<std::size_t>("features", rest.substr(0, colon));
  if (*p.top_k == 0) throw ConfigError("feature policy '" + t + "': K must be at least 1");
  if (colon != std::string_view::npos) p.method = parse_ranking_method(rest.substr(colon + 1));
  return p;
}

std::string FeaturePolicy::to_string() const {
  if (!top_k) return "all";
  std::string s = "top:" + std::to_string(*top_k);
  if (method) s += ":" + std::string(hpelm::to_string(*method));
  return s;
}

void ExperimentConfig::validate() const {
  if (data_path.empty()) throw ConfigError("no dataset given (--data)");
  if (label_column.empty()) throw ConfigError("label column name is empty");
  if (combos.empty()) throw ConfigError("no activation combos configured");
  if (features.empty()) throw ConfigError("no feature policies configured");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if (block_size == 0) throw ConfigError("block size must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  }
  if (budget > 0) {
    for (const auto& c : combos) {
      if (c.total() != budget) {
        throw ConfigError("combo " + c.display() + " has " + std::to_string(c.total()) +
                          " neurons, budget is " + std::to_string(budget));
      }
    }
  }
}

void apply_config(std::istream& in, ExperimentConfig& config, const std::set<std::string>& locked) {
  std::string line;
  std::size_t line_no = 0;
  bool combos_from_file = false;
  bool features_from_file = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string text = trim(std::string_view(line).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (locked.contains(key)) continue;

    if (key == "data") {
      config.data_path = value;
    } else if (key == "label_col") {
      config.label_column = value;
    } else if (key == "positive_class") {
      config.positive_class = value;
    } else if (key == "col_type") {
      add_type_override(config.column_types, value);
    } else if (key == "features") {
      if (!features_from_file) config.features.clear();
      features_from_file = true;
      config.features.push_back(FeaturePolicy::parse(value));
    } else if (key == "combo") {
      if (!combos_from_file) config.combos.clear();
      combos_from_file = true;
      config.combos.push_back(LayerSpec::parse(value));
    } else if (key == "budget") {
      config.budget = parse_number<std::size_t>(key, value);
    } else if (key == "seed") {
      config.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "ridge") {
      config.ridge = parse_ridge(value);
    } else if (key == "jobs") {
      config.jobs = parse_number<std::size_t>(key, value);
    } else if (key == "block_size") {
      config.block_size = parse_number<std::size_t>(key, value);
    } else if (key == "train_fraction") {
      config.train_fraction = parse_number<double>(key, value);
    } else if (key == "out") {
      config.out = value;
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
}

void apply_config_file(const std::string& path, ExperimentConfig& config,
                       const std::set<std::string>& locked) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  const std::string before = config.data_path;
  apply_config(in, config, locked);
  // data paths in a config file are relative to the file, not the caller
  if (config.data_path != before && std::filesystem::path(config.data_path).is_relative()) {
    config.data_path = (std::filesystem::path(path).parent_path() / config.data_path).string();
  }
}

void ExperimentReport::write_csv(std::ostream& out) const {
  out << "feature_policy,priority_list,combo,train_accuracy,test_accuracy,train_residual,"
         "wall_time_ms,seed,error\n";
  for (const auto& r : rows) {
    char residual[32];
    std::snprintf(residual, sizeof residual, "%.9g", r.train_residual);
    const bool ok = r.error.empty();
    out << r.feature_policy << ',' << r.priority_list << ',' << r.combo << ','
        << (ok ? fixed(r.train_accuracy, 6) : "") << ',' << (ok ? fixed(r.test_accuracy, 6) : "")
        << ',' << (ok ? residual : "") << ',' << fixed(r.wall_time_ms, 3) << ',' << r.seed << ','
        << csv::field(r.error) << '\n';
  }
}

void ExperimentReport::print_table(std::ostream& out) const {
  std::size_t policy_w = 14, combo_w = 5;
  for (const auto& r : rows) {
    policy_w = std::max(policy_w, r.feature_policy.size() + r.priority_list.size() + 1);
    combo_w = std::max(combo_w, r.combo.size());
  }
  out << std::left << std::setw(static_cast<int>(policy_w)) << "features" << "  "
      << std::setw(static_cast<int>(combo_w)) << "combo" << "  train   test\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(policy_w))
        << (r.feature_policy + " " + r.priority_list) << "  " << std::setw(static_cast<int>(combo_w))
        << r.combo << "  ";
    if (r.error.empty()) {
      out << fixed(r.train_accuracy, 4) << "  " << fixed(r.test_accuracy, 4) << '\n';
    } else {
      out << "error: " << r.error << '\n';
    }
  }
}

namespace {

// Re-throws a library error with the pipeline stage prefixed, keeping its
// family (and so the CLI exit code).
template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  }
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  const RawTable table = in_stage("reading", [&] {
    return load_csv(config.data_path, config.label_column, config.column_types);
  });
  return in_stage("filtering", [&] {
    // Normalization statistics come from training rows only, so the split
    // assignment is drawn here; the matrices are cut in the splitting stage.
    const SplitAssignment split =
        split_stratified(table.labels, config.train_fraction, config.seed);
    PreparedData data{encode_and_normalize(table, split), {}};
    const auto& classes = data.dataset.class_names;
    if (config.positive_class) {
      if (std::find(classes.begin(), classes.end(), *config.positive_class) == classes.end()) {
        throw ConfigError("positive class '" + *config.positive_class + "' does not occur in the data");
      }
      data.positive_class = *config.positive_class;
    } else {
      data.positive_class = classes.back();
    }
    return data;
  });
}

std::vector<std::size_t> select_features(const Dataset& dataset, const FeaturePolicy& policy) {
  const std::size_t d = dataset.x.cols();
  if (!policy.top_k) {
    std::vector<std::size_t> all(d);
    for (std::size_t j = 0; j < d; ++j) all[j] = j;
    return all;
  }
  const RankingMethod method = policy.method.value_or(
      dataset.class_names.size() == 2 ? RankingMethod::f_score : RankingMethod::fisher);
  const FeatureRanking ranking =
      rank_features(method, dataset.train_x(), dataset.train_label_index());
  return select_top_k(ranking, *policy.top_k);
}

std::uint64_t row_seed(std::uint64_t seed, std::size_t row_index) noexcept {
  return derive_seed(seed, {row_index});
}

RunResult run_once(const PreparedData& data, const FeaturePolicy& policy,
                   const std::vector<std::size_t>& features, const LayerSpec& combo,
                   std::uint64_t seed, const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Dataset& ds = data.dataset;

  struct Parts {
    DenseMatrix train_x, test_x;
    std::vector<std::string> train_y, test_y;
  };
  Parts parts = in_stage("splitting", [&] {
    return Parts{ds.train_x().select_cols(features), ds.test_x().select_cols(features),
                 ds.train_labels(), ds.test_labels()};
  });

  FitOptions options;
  options.ridge = config.ridge;
  options.block_size = config.block_size;
  RunResult result;
  result.model = in_stage("hp-elm", [&] { return fit(combo, parts.train_x, parts.train_y, seed, options); });
  result.model.encoding = ds.encoding;
  result.model.selected_features = features;

  in_stage("evaluation", [&] {
    result.row.train_accuracy =
        accuracy(evaluate(result.model, parts.train_x, parts.train_y, data.positive_class));
    result.row.test_accuracy =
        parts.test_y.empty()
            ? 0.0
            : accuracy(evaluate(result.model, parts.test_x, parts.test_y, data.positive_class));
    return 0;
  });

  result.row.feature_policy = policy.to_string();
  result.row.priority_list = format_priority_list(features);
  result.row.combo = combo.display();
  result.row.train_residual = result.model.train_residual;
  result.row.seed = seed;
  result.row.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ExperimentReport run_grid(const ExperimentConfig& config) {
  config.validate();
  const PreparedData data = prepare_data(config);

  std::vector<std::vector<std::size_t>> selections(config.features.size());
  std::vector<std::string> selection_errors(config.features.size());
  for (std::size_t p = 0; p < config.features.size(); ++p) {
    try {
      selections[p] = in_stage("filtering", [&] { return select_features(data.dataset, config.features[p]); });
    } catch (const Error& e) {
      selection_errors[p] = e.what();
    }
  }

  const std::size_t combos = config.combos.size();
  const std::size_t total = config.features.size() * combos;
  ExperimentReport report;
  report.rows.resize(total);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const std::size_t p = i / combos;
      const LayerSpec& combo = config.combos[i % combos];
      const std::uint64_t seed = row_seed(config.seed, i);
      try {
        if (!selection_errors[p].empty()) throw ConfigError(selection_errors[p]);
        report.rows[i] = run_once(data, config.features[p], selections[p], combo, seed, config).row;
      } catch (const std::exception& e) {
        ReportRow& row = report.rows[i];
        row.feature_policy = config.features[p].to_string();
        row.priority_list = format_priority_list(selections[p]);
        row.combo = combo.display();
        row.seed = seed;
        row.error = e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, total);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return report;
}

}  // namespace hpelm
