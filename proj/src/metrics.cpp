#include "hpelm/metrics.hpp"

#include <algorithm>

#include "hpelm/error.hpp"

namespace hpelm {

ConfusionCounts confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t num_classes, std::size_t positive_class) {
  if (truth.size() != predicted.size()) {
    throw DataError("confusion: " + std::to_string(truth.size()) + " true labels but " +
                    std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw DataError("confusion: no samples");
  if (positive_class >= num_classes) throw DataError("confusion: unknown positive class");

  ConfusionCounts c;
  c.per_class.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw DataError("confusion: label index out of range at sample " + std::to_string(i));
    }
    ++c.per_class[truth[i]][predicted[i]];
    const bool actual = truth[i] == positive_class;
    const bool flagged = predicted[i] == positive_class;
    if (actual && flagged) {
      ++c.tp;
    } else if (!actual && !flagged) {
      ++c.tn;
    } else if (flagged) {
      ++c.fp;
    } else {
      ++c.fn;
    }
  }
  return c;
}

ConfusionCounts confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          std::span<const std::string> classes, const std::string& positive_class) {
  auto index_of = [&](const std::string& label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw DataError("confusion: unknown class '" + label + "'");
    return static_cast<std::size_t>(it - classes.begin());
  };
  if (truth.size() != predicted.size()) {
    throw DataError("confusion: " + std::to_string(truth.size()) + " true labels but " +
                    std::to_string(predicted.size()) + " predictions");
  }
  std::vector<std::size_t> t(truth.size()), p(predicted.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    t[i] = index_of(truth[i]);
    p[i] = index_of(predicted[i]);
  }
  return confusion(t, p, classes.size(), index_of(positive_class));
}

double accuracy(const ConfusionCounts& counts) {
  const std::size_t total = counts.tp + counts.fn + counts.tn + counts.fp;
  if (total == 0) throw DataError("accuracy is undefined for zero samples");
  return static_cast<double>(counts.tp + counts.tn) / static_cast<double>(total);
}

}  // namespace hpelm
