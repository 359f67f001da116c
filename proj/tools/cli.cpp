#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include <CLI11.hpp>

#include "hpelm/csv.hpp"
#include "hpelm/error.hpp"
#include "hpelm/experiment.hpp"
#include "hpelm/featsel.hpp"
#include "hpelm/model.hpp"

namespace hpelm::cli {

namespace {

struct ExperimentFlags {
  std::string config;
  std::string data;
  std::string label_col;
  std::string positive_class;
  std::vector<std::string> col_types;
  std::vector<std::string> features;
  std::vector<std::string> combos;
  std::uint64_t seed = 0;
  std::string ridge;
  std::size_t budget = 0;
  std::size_t jobs = 1;
  std::size_t block_size = 0;
  std::string out;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* data = nullptr;
  CLI::Option* label_col = nullptr;
  CLI::Option* positive_class = nullptr;
  CLI::Option* col_types = nullptr;
  CLI::Option* features = nullptr;
  CLI::Option* combos = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* ridge = nullptr;
  CLI::Option* budget = nullptr;
  CLI::Option* jobs = nullptr;
  CLI::Option* block_size = nullptr;
  CLI::Option* out = nullptr;
};

Options add_data_flags(CLI::App* cmd, ExperimentFlags& f) {
  Options o;
  o.config = cmd->add_option("--config", f.config, "key = value experiment file");
  o.data = cmd->add_option("--data", f.data, "labelled CSV file");
  o.label_col = cmd->add_option("--label-col", f.label_col, "name of the label column (default: label)");
  o.col_types = cmd->add_option("--col-type", f.col_types, "force a column type: name=categorical|numeric");
  o.seed = cmd->add_option("--seed", f.seed, "random seed (split and hidden layer)");
  return o;
}

Options add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  Options o = add_data_flags(cmd, f);
  o.positive_class = cmd->add_option("--positive-class", f.positive_class,
                                     "class pooled as positive (default: last in sorted order)");
  o.features = cmd->add_option("--features", f.features, "all | top:K | top:K:f_score | top:K:fisher");
  o.combos = cmd->add_option("--combo", f.combos, "neuron groups, e.g. \"tanh:1000,rbf_l1:1000\"");
  o.ridge = cmd->add_option("--ridge", f.ridge, "ridge value or auto");
  o.budget = cmd->add_option("--budget", f.budget, "required neurons per combo, 0 disables (default 2000)");
  o.jobs = cmd->add_option("--jobs", f.jobs, "parallel grid rows");
  o.block_size = cmd->add_option("--block-size", f.block_size, "rows per streamed block (default 4096)");
  return o;
}

ExperimentConfig build_config(const Options& o, const ExperimentFlags& f) {
  ExperimentConfig c;
  auto given = [](CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
  std::set<std::string> locked;
  const std::pair<CLI::Option*, const char*> keys[] = {
      {o.data, "data"},         {o.label_col, "label_col"}, {o.positive_class, "positive_class"},
      {o.col_types, "col_type"}, {o.features, "features"},  {o.combos, "combo"},
      {o.seed, "seed"},         {o.ridge, "ridge"},         {o.budget, "budget"},
      {o.jobs, "jobs"},         {o.block_size, "block_size"}, {o.out, "out"}};
  for (const auto& [opt, key] : keys) {
    if (given(opt)) locked.insert(key);
  }
  if (given(o.config)) apply_config_file(f.config, c, locked);

  if (given(o.data)) c.data_path = f.data;
  if (given(o.label_col)) c.label_column = f.label_col;
  if (given(o.positive_class)) c.positive_class = f.positive_class;
  if (given(o.col_types)) {
    for (const auto& t : f.col_types) add_type_override(c.column_types, t);
  }
  if (given(o.features)) {
    c.features.clear();
    for (const auto& p : f.features) c.features.push_back(FeaturePolicy::parse(p));
  }
  if (given(o.combos)) {
    c.combos.clear();
    for (const auto& s : f.combos) c.combos.push_back(LayerSpec::parse(s));
  }
  if (given(o.seed)) c.seed = f.seed;
  if (given(o.ridge)) {
    if (f.ridge == "auto") {
      c.ridge.reset();
    } else {
      double r = 0.0;
      if (std::sscanf(f.ridge.c_str(), "%lf", &r) != 1 || !(r >= 0.0)) {
        throw ConfigError("--ridge must be a non-negative number or auto");
      }
      c.ridge = r;
    }
  }
  if (given(o.budget)) c.budget = f.budget;
  if (given(o.jobs)) c.jobs = f.jobs;
  if (given(o.block_size)) c.block_size = f.block_size;
  if (given(o.out)) c.out = f.out;
  return c;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path);
  if (!file) throw DataError("cannot write '" + path + "'");
  return file;
}

int cmd_rank(const Options& o, const ExperimentFlags& f, const std::string& method_text,
             std::size_t k, std::ostream& out) {
  ExperimentConfig config = build_config(o, f);
  if (config.data_path.empty()) throw ConfigError("no dataset given (--data)");
  const PreparedData data = prepare_data(config);
  const Dataset& ds = data.dataset;
  const RankingMethod method =
      method_text == "auto"
          ? (ds.class_names.size() == 2 ? RankingMethod::f_score : RankingMethod::fisher)
          : parse_ranking_method(method_text);
  FeatureRanking ranking = rank_features(method, ds.train_x(), ds.train_label_index());
  const std::size_t d = ranking.order.size();
  const std::size_t top = k == 0 ? d : k;
  const std::vector<std::size_t> chosen = select_top_k(ranking, top);
  out << (top == d ? "All Features " : "Top " + std::to_string(top) + " Features ")
      << format_priority_list(chosen) << '\n';
  ranking.order = chosen;
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    write_ranking_csv(file, ranking, ds.feature_names);
  } else {
    write_ranking_csv(out, ranking, ds.feature_names);
  }
  return kOk;
}

int cmd_train(const Options& o, const ExperimentFlags& f, const std::string& report_path,
              const std::string& split_path, std::ostream& out) {
  ExperimentConfig config = build_config(o, f);
  if (config.combos.size() != 1) throw ConfigError("train takes exactly one --combo");
  if (config.features.size() != 1) throw ConfigError("train takes exactly one --features policy");
  config.validate();
  const PreparedData data = prepare_data(config);
  const std::vector<std::size_t> features = select_features(data.dataset, config.features.front());
  const RunResult result = run_once(data, config.features.front(), features, config.combos.front(),
                                    row_seed(config.seed, 0), config);
  ExperimentReport report{{result.row}};
  report.print_table(out);
  if (!config.out.empty()) save_model(result.model, config.out);
  if (!report_path.empty()) {
    std::ofstream file = open_output(report_path);
    report.write_csv(file);
  }
  if (!split_path.empty()) {
    std::ofstream file = open_output(split_path);
    write_split_manifest(file, data.dataset.split);
  }
  return kOk;
}

int cmd_grid(const Options& o, const ExperimentFlags& f, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = build_config(o, f);
  const ExperimentReport report = run_grid(config);
  const auto failed = std::count_if(report.rows.begin(), report.rows.end(),
                                    [](const ReportRow& r) { return !r.error.empty(); });
  if (failed > 0) {
    err << "warning: " << failed << " of " << report.rows.size() << " grid rows failed (see the error column)\n";
  }
  if (!config.out.empty()) {
    std::ofstream file = open_output(config.out);
    report.write_csv(file);
    report.print_table(out);
  } else {
    report.write_csv(out);
  }
  return kOk;
}

int cmd_score(const std::string& model_path, const std::string& data_path, const std::string& split_path,
              const std::string& subset, const std::string& positive, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
  if (subset != "all" && subset != "train" && subset != "test") {
    throw ConfigError("--subset must be all, train or test");
  }
  if (subset != "all" && split_path.empty()) throw ConfigError("--subset needs --split");
  const ElmModel model = load_model(model_path);
  const RawTable table = load_csv(data_path, model.encoding.label_column, {}, true);
  DenseMatrix x = model.encoding.transform(table).select_cols(model.selected_features);

  std::vector<std::size_t> rows;
  if (subset == "all") {
    rows.resize(table.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  } else {
    std::ifstream in(split_path);
    if (!in) throw DataError("cannot open split manifest '" + split_path + "'");
    const SplitAssignment split = read_split_manifest(in);
    if (split.train.size() + split.test.size() != table.rows()) {
      throw DataError("split manifest covers " + std::to_string(split.train.size() + split.test.size()) +
                      " rows but the data has " + std::to_string(table.rows()));
    }
    rows = subset == "train" ? split.train : split.test;
  }
  x = x.select_rows(rows);
  const DenseMatrix scores = predict_scores(model, x);

  std::ofstream file;
  if (!out_path.empty()) file = open_output(out_path);
  std::ostream& dest = out_path.empty() ? out : file;
  dest << "row,label";
  for (const auto& c : model.classes) dest << ',' << csv::field("score_" + c);
  dest << '\n';
  std::vector<std::string> predicted(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto s = scores.row(i);
    const std::size_t best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    predicted[i] = model.classes[best];
    dest << rows[i] << ',' << csv::field(predicted[i]);
    for (double v : s) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      dest << ',' << buf;
    }
    dest << '\n';
  }
  if (table.labelled && !rows.empty()) {
    std::vector<std::string> truth;
    for (std::size_t r : rows) truth.push_back(table.labels[r]);
    const ConfusionCounts c =
        confusion(truth, predicted, model.classes, positive.empty() ? model.classes.back() : positive);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", accuracy(c));
    (out_path.empty() ? err : out) << "accuracy " << buf << " (" << rows.size() << " rows)\n";
  }
  return kOk;
}

int cmd_synth(const SynthOptions& options, const std::string& label_col, const std::string& out_path,
              std::ostream& out) {
  const SyntheticData data = synth_dataset(options);
  if (out_path.empty()) {
    data.write_csv(out, label_col);
  } else {
    std::ofstream file = open_output(out_path);
    data.write_csv(file, label_col);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extreme learning machine classifier with activation-grid experiments", "hpelm"};
  app.require_subcommand(1);

  ExperimentFlags rank_flags;
  std::string rank_method = "auto";
  std::size_t rank_k = 0;
  auto* rank = app.add_subcommand("rank", "rank features by F-score or Fisher score");
  Options rank_opts = add_data_flags(rank, rank_flags);
  rank_opts.out = rank->add_option("--out", rank_flags.out, "ranking CSV (default: stdout)");
  rank->add_option("--method", rank_method, "f_score | fisher | auto");
  rank->add_option("--k", rank_k, "number of features to list (default: all)");

  ExperimentFlags train_flags;
  std::string report_path, split_path;
  auto* train = app.add_subcommand("train", "fit one model and report train/test accuracy");
  Options train_opts = add_experiment_flags(train, train_flags);
  train_opts.out = train->add_option("--out", train_flags.out, "model file to write");
  train->add_option("--report", report_path, "CSV file for the report row");
  train->add_option("--split-out", split_path, "file for the index,train|test split manifest");

  ExperimentFlags grid_flags;
  auto* grid = app.add_subcommand("grid", "run every feature policy x activation combo");
  Options grid_opts = add_experiment_flags(grid, grid_flags);
  grid_opts.out = grid->add_option("--out", grid_flags.out, "report CSV (default: stdout)");

  std::string score_model, score_data, score_split, score_subset = "all", score_positive, score_out;
  auto* score = app.add_subcommand("score", "predict rows of a CSV with a saved model");
  score->add_option("--model", score_model, "model file")->required();
  score->add_option("--data", score_data, "CSV with the training schema")->required();
  score->add_option("--split", score_split, "split manifest written by train --split-out");
  score->add_option("--subset", score_subset, "all | train | test");
  score->add_option("--positive-class", score_positive, "class pooled as positive for the accuracy line");
  score->add_option("--out", score_out, "predictions CSV (default: stdout)");

  SynthOptions synth_options;
  std::string synth_kind = "two_gaussians", synth_label = "label", synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic labelled dataset");
  synth->add_option("--kind", synth_kind, "two_gaussians | planted_feature | xor");
  synth->add_option("--n", synth_options.n, "rows");
  synth->add_option("--d", synth_options.d, "features");
  synth->add_option("--seed", synth_options.seed, "random seed");
  synth->add_option("--offset", synth_options.offset, "class mean offset");
  synth->add_option("--classes", synth_options.classes, "classes (planted_feature)");
  synth->add_option("--label-col", synth_label, "label column name");
  synth->add_option("--out", synth_out, "CSV file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (rank->parsed()) return cmd_rank(rank_opts, rank_flags, rank_method, rank_k, out);
    if (train->parsed()) return cmd_train(train_opts, train_flags, report_path, split_path, out);
    if (grid->parsed()) return cmd_grid(grid_opts, grid_flags, out, err);
    if (score->parsed()) {
      return cmd_score(score_model, score_data, score_split, score_subset, score_positive, score_out, out, err);
    }
    if (synth->parsed()) {
      synth_options.kind = parse_synth_kind(synth_kind);
      return cmd_synth(synth_options, synth_label, synth_out, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace hpelm::cli
