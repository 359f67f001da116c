#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpelm/activation.hpp"
#include "hpelm/data.hpp"
#include "hpelm/linalg.hpp"
#include "hpelm/metrics.hpp"

namespace hpelm {

struct FitOptions {
  // Ridge added to HᵀH; when unset, default_ridge() of the accumulated system.
  std::optional<double> ridge;
  std::size_t block_size = 4096;
  // Value written into the own-class entry of each one-hot target row.
  double target_value = 1.0;
};

// A trained network. Immutable once fit returns.
struct ElmModel {
  LayerSpec layer;
  std::vector<NeuronGroup> groups;
  DenseMatrix beta;                  // L × m
  std::vector<std::string> classes;  // m, sorted
  std::uint64_t seed = 0;
  double ridge_used = 0.0;
  double train_residual = 0.0;

  // Raw-column preprocessing for scoring CSV files. `selected_features`
  // picks the encoded columns fed to the network, in order.
  Encoding encoding;
  std::vector<std::size_t> selected_features;

  std::size_t input_dim() const noexcept;
  std::size_t hidden() const noexcept { return beta.rows(); }
};

struct Prediction {
  std::vector<double> scores;
  std::size_t label = 0;  // argmax of scores, ties to the lower index
};

// One-hot target matrix for `labels` against `classes`.
DenseMatrix one_hot(std::span<const std::size_t> label_index, std::size_t classes, double value = 1.0);

ElmModel fit(const LayerSpec& layer, const DenseMatrix& train_x, std::span<const std::string> labels,
             std::uint64_t seed, const FitOptions& options = {});

Prediction predict(const ElmModel& model, std::span<const double> x);
// Raw network outputs for every row, computed in blocks.
DenseMatrix predict_scores(const ElmModel& model, const DenseMatrix& x,
                           std::size_t block_size = 4096);
std::vector<std::size_t> predict_labels(const ElmModel& model, const DenseMatrix& x);

// Confusion counts of the model's predictions, pooled one-vs-rest on
// `positive_class`. Labels outside model.classes are a DataError.
ConfusionCounts evaluate(const ElmModel& model, const DenseMatrix& x,
                         std::span<const std::string> labels, const std::string& positive_class);

// JSON container; scores of a reloaded model match bit for bit.
void save_model(const ElmModel& model, std::ostream& out);
ElmModel load_model(std::istream& in);
void save_model(const ElmModel& model, const std::filesystem::path& path);
ElmModel load_model(const std::filesystem::path& path);

}  // namespace hpelm
