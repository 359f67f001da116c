#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hpelm {

// Binary counts pooled one-vs-rest on a designated positive class, plus the
// full m × m matrix (rows = true class, columns = predicted class).
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<std::vector<std::size_t>> per_class;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
};

ConfusionCounts confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t num_classes, std::size_t positive_class);

// String-labelled form; the class set is `classes`, and any label outside it
// is an error.
ConfusionCounts confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          std::span<const std::string> classes, const std::string& positive_class);

// (tp + tn) / (tp + fn + tn + fp)
double accuracy(const ConfusionCounts& counts);

}  // namespace hpelm
