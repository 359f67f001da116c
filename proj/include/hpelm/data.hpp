#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpelm/linalg.hpp"

namespace hpelm {

enum class ColumnType { numeric, categorical };

std::string_view to_string(ColumnType type) noexcept;

using TypeOverrides = std::map<std::string, ColumnType>;

// Parses "name=categorical" or "name=numeric" into `overrides`.
void add_type_override(TypeOverrides& overrides, std::string_view assignment);

// Vocabulary entry used for an empty categorical cell.
inline constexpr std::string_view kMissingCategory = "∅";

// A labelled CSV table before encoding. Cells are kept as trimmed text;
// `types` is the inferred (or overridden) type of each feature column.
struct RawTable {
  std::string label_column;
  std::vector<std::string> feature_names;
  std::vector<ColumnType> types;
  std::vector<std::vector<std::string>> columns;  // [feature][row]
  std::vector<std::string> labels;
  bool labelled = false;  // label column present
  std::size_t row_count = 0;

  std::size_t rows() const noexcept { return row_count; }
};

// Reads a header + rows CSV. The label column must exist unless
// `label_optional` is set. A column is numeric when every non-empty cell
// parses as a finite real number, unless overridden. Throws ParseError with
// the line number for ragged rows or empty labels.
RawTable read_csv(std::istream& in, std::string_view label_column,
                  const TypeOverrides& overrides = {}, bool label_optional = false);
RawTable load_csv(const std::filesystem::path& path, std::string_view label_column,
                  const TypeOverrides& overrides = {}, bool label_optional = false);

struct SplitAssignment {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
  std::uint64_t seed = 0;
  double train_fraction = 0.70;
};

// Per class, floor(f·nₖ + 0.5) rows go to training after a seeded shuffle;
// a correction pass then moves single rows of the classes furthest from
// their exact share until the training total is floor(f·n + 0.5).
SplitAssignment split_stratified(std::span<const std::string> labels, double train_fraction,
                                 std::uint64_t seed);

// "index,subset" header followed by one "i,train" / "i,test" line per row.
void write_split_manifest(std::ostream& out, const SplitAssignment& split);
SplitAssignment read_split_manifest(std::istream& in);

// Fitted transform of one raw column into one z-scored feature.
struct ColumnEncoder {
  std::string name;
  ColumnType type = ColumnType::numeric;
  double median = 0.0;                   // numeric imputation value
  std::vector<std::string> vocabulary;  // categorical: code = position
  double mean = 0.0;
  double stdev = 0.0;  // population stdev of training codes; 0 marks a constant column

  // Value before standardization (imputed number or vocabulary code).
  double code(std::string_view cell) const;
  double transform(std::string_view cell) const;
};

// Encoders for every feature column, fitted on training rows only.
struct Encoding {
  std::string label_column;
  std::vector<ColumnEncoder> columns;

  static Encoding fit(const RawTable& table, std::span<const std::size_t> train_rows);
  // Maps columns by name; a missing or unexpected column is a DataError
  // naming it.
  DenseMatrix transform(const RawTable& table) const;
  std::vector<std::string> feature_names() const;
};

struct Dataset {
  DenseMatrix x;                         // n × d, encoded
  std::vector<std::string> labels;       // n
  std::vector<std::size_t> label_index;  // n, positions in class_names
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // sorted
  Encoding encoding;
  SplitAssignment split;

  DenseMatrix train_x() const { return x.select_rows(split.train); }
  DenseMatrix test_x() const { return x.select_rows(split.test); }
  std::vector<std::string> train_labels() const;
  std::vector<std::string> test_labels() const;
  std::vector<std::size_t> train_label_index() const;
};

Dataset encode_and_normalize(const RawTable& table, const SplitAssignment& split);

enum class SynthKind { two_gaussians, planted_feature, xor_gaussians };

std::string_view to_string(SynthKind kind) noexcept;
SynthKind parse_synth_kind(std::string_view token);

struct SynthOptions {
  SynthKind kind = SynthKind::two_gaussians;
  std::size_t n = 400;
  std::size_t d = 2;
  std::uint64_t seed = 0;
  // two_gaussians: class means ±offset·1; xor_gaussians: cluster centres at
  // (±offset, ±offset) on the first two features.
  double offset = 3.0;
  // planted_feature only.
  std::size_t classes = 2;
};

// Deterministic desk-scale datasets. Labels are "0", "1", ...; features are
// named f0, f1, ...; class sizes are balanced to within one sample.
struct SyntheticData {
  DenseMatrix x;
  std::vector<std::string> labels;
  std::vector<std::string> feature_names;
  std::optional<std::size_t> informative_feature;  // planted_feature only

  RawTable to_table(std::string_view label_column = "label") const;
  void write_csv(std::ostream& out, std::string_view label_column = "label") const;
};

SyntheticData synth_dataset(const SynthOptions& options);

}  // namespace hpelm
