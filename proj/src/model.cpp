#include "hpelm/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "hpelm/error.hpp"

namespace hpelm {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "hpelm-model";
constexpr int kVersion = 1;

std::size_t class_position(const std::vector<std::string>& classes, const std::string& label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label) throw DataError("unknown class '" + label + "'");
  return static_cast<std::size_t>(it - classes.begin());
}

json matrix_to_json(const DenseMatrix& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", std::vector<double>(m.values().begin(), m.values().end())}};
}

DenseMatrix matrix_from_json(const json& j) {
  return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                     j.at("data").get<std::vector<double>>());
}

}  // namespace

std::size_t ElmModel::input_dim() const noexcept {
  return groups.empty() ? 0 : groups.front().input_dim();
}

DenseMatrix one_hot(std::span<const std::size_t> label_index, std::size_t classes, double value) {
  DenseMatrix t(label_index.size(), classes);
  for (std::size_t i = 0; i < label_index.size(); ++i) {
    if (label_index[i] >= classes) throw DataError("label index out of range");
    t(i, label_index[i]) = value;
  }
  return t;
}

ElmModel fit(const LayerSpec& layer, const DenseMatrix& train_x, std::span<const std::string> labels,
             std::uint64_t seed, const FitOptions& options) {
  if (train_x.rows() != labels.size()) {
    throw ShapeError("fit: " + std::to_string(train_x.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.size() < 2) throw DataError("fit: need at least 2 training samples");
  if (options.block_size == 0) throw ConfigError("fit: block size must be positive");
  if (!(options.target_value > 0.0)) throw ConfigError("fit: target value must be positive");

  ElmModel model;
  model.layer = layer;
  model.seed = seed;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) {
    throw DataError("fit: degenerate target, every training label is '" + model.classes.front() + "'");
  }
  std::vector<std::size_t> label_index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) label_index[i] = class_position(model.classes, labels[i]);

  model.groups = instantiate(layer, train_x.cols(), train_x, seed);
  const std::size_t m = model.classes.size();
  const std::size_t n = train_x.rows();
  const std::size_t block = options.block_size;

  NormalEqAccumulator acc(layer.total(), m);
  for (std::size_t r0 = 0; r0 < n; r0 += block) {
    const std::size_t count = std::min(block, n - r0);
    const DenseMatrix h = build_hidden(model.groups, train_x.row_block(r0, count));
    acc.accumulate(h, one_hot(std::span(label_index).subspan(r0, count), m, options.target_value));
  }
  SolveReport solved = solve_normal(acc, options.ridge.value_or(default_ridge(acc)));
  model.beta = std::move(solved.beta);
  model.ridge_used = solved.ridge_used;

  double ss = 0.0;
  for (std::size_t r0 = 0; r0 < n; r0 += block) {
    const std::size_t count = std::min(block, n - r0);
    const DenseMatrix y = matmul(build_hidden(model.groups, train_x.row_block(r0, count)), model.beta);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        const double t = label_index[r0 + i] == c ? options.target_value : 0.0;
        ss += (y(i, c) - t) * (y(i, c) - t);
      }
    }
  }
  model.train_residual = std::sqrt(ss);
  return model;
}

namespace {

std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

}  // namespace

Prediction predict(const ElmModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("predict: row has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(model.input_dim()));
  }
  const DenseMatrix row(1, x.size(), std::vector<double>(x.begin(), x.end()));
  const DenseMatrix y = matmul(build_hidden(model.groups, row), model.beta);
  Prediction p;
  p.scores.assign(y.values().begin(), y.values().end());
  p.label = argmax(p.scores);
  return p;
}

DenseMatrix predict_scores(const ElmModel& model, const DenseMatrix& x, std::size_t block_size) {
  if (x.cols() != model.input_dim()) {
    throw ShapeError("predict: input has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(model.input_dim()));
  }
  if (block_size == 0) throw ConfigError("predict: block size must be positive");
  DenseMatrix out(x.rows(), model.beta.cols());
  for (std::size_t r0 = 0; r0 < x.rows(); r0 += block_size) {
    const std::size_t count = std::min(block_size, x.rows() - r0);
    const DenseMatrix y = matmul(build_hidden(model.groups, x.row_block(r0, count)), model.beta);
    std::copy(y.values().begin(), y.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(r0 * out.cols()));
  }
  return out;
}

std::vector<std::size_t> predict_labels(const ElmModel& model, const DenseMatrix& x) {
  const DenseMatrix scores = predict_scores(model, x);
  std::vector<std::size_t> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = argmax(scores.row(i));
  return out;
}

ConfusionCounts evaluate(const ElmModel& model, const DenseMatrix& x,
                         std::span<const std::string> labels, const std::string& positive_class) {
  if (labels.size() != x.rows()) {
    throw ShapeError("evaluate: " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> truth(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) truth[i] = class_position(model.classes, labels[i]);
  const std::size_t positive = class_position(model.classes, positive_class);
  return confusion(truth, predict_labels(model, x), model.classes.size(), positive);
}

void save_model(const ElmModel& model, std::ostream& out) {
  json groups = json::array();
  for (const auto& g : model.groups) {
    json jg{{"kind", to_string(g.kind)}, {"count", g.count}};
    if (is_rbf(g.kind)) {
      jg["centers"] = matrix_to_json(g.centers);
      jg["widths"] = g.widths;
    } else {
      jg["weights"] = matrix_to_json(g.weights);
      jg["biases"] = g.biases;
    }
    groups.push_back(std::move(jg));
  }
  json columns = json::array();
  for (const auto& c : model.encoding.columns) {
    columns.push_back(json{{"name", c.name},
                           {"type", to_string(c.type)},
                           {"median", c.median},
                           {"vocabulary", c.vocabulary},
                           {"mean", c.mean},
                           {"stdev", c.stdev}});
  }
  const json doc{{"format", kFormat},
                 {"version", kVersion},
                 {"layer", model.layer.to_string()},
                 {"classes", model.classes},
                 {"seed", model.seed},
                 {"ridge_used", model.ridge_used},
                 {"train_residual", model.train_residual},
                 {"label_column", model.encoding.label_column},
                 {"columns", std::move(columns)},
                 {"selected_features", model.selected_features},
                 {"groups", std::move(groups)},
                 {"beta", matrix_to_json(model.beta)}};
  out << doc.dump() << '\n';
  if (!out) throw DataError("failed to write model");
}

ElmModel load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion) {
      throw DataError("unsupported model container");
    }
    ElmModel model;
    model.layer = LayerSpec::parse(doc.at("layer").get<std::string>());
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    model.ridge_used = doc.at("ridge_used").get<double>();
    model.train_residual = doc.at("train_residual").get<double>();
    model.encoding.label_column = doc.at("label_column").get<std::string>();
    for (const auto& jc : doc.at("columns")) {
      ColumnEncoder c;
      c.name = jc.at("name").get<std::string>();
      c.type = jc.at("type").get<std::string>() == "numeric" ? ColumnType::numeric
                                                               : ColumnType::categorical;
      c.median = jc.at("median").get<double>();
      c.vocabulary = jc.at("vocabulary").get<std::vector<std::string>>();
      c.mean = jc.at("mean").get<double>();
      c.stdev = jc.at("stdev").get<double>();
      model.encoding.columns.push_back(std::move(c));
    }
    model.selected_features = doc.at("selected_features").get<std::vector<std::size_t>>();
    for (const auto& jg : doc.at("groups")) {
      NeuronGroup g;
      g.kind = parse_activation(jg.at("kind").get<std::string>());
      g.count = jg.at("count").get<std::size_t>();
      if (is_rbf(g.kind)) {
        g.centers = matrix_from_json(jg.at("centers"));
        g.widths = jg.at("widths").get<std::vector<double>>();
      } else {
        g.weights = matrix_from_json(jg.at("weights"));
        g.biases = jg.at("biases").get<std::vector<double>>();
      }
      model.groups.push_back(std::move(g));
    }
    model.beta = matrix_from_json(doc.at("beta"));
    if (model.beta.cols() != model.classes.size() || model.beta.rows() != model.layer.total()) {
      throw DataError("model container has inconsistent output weights");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model container: ") + e.what());
  } catch (const ShapeError& e) {
    throw DataError(std::string("malformed model container: ") + e.what());
  }
}

void save_model(const ElmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  save_model(model, out);
}

ElmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model '" + path.string() + "'");
  return load_model(in);
}

}  // namespace hpelm
