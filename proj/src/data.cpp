#include "hpelm/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>

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

std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

// Population mean/stdev; stdev 0 when every value is identical.
void standardize_stats(const std::vector<double>& codes, double& mean, double& stdev) {
  mean = 0.0;
  stdev = 0.0;
  if (codes.empty()) return;
  const auto [lo, hi] = std::minmax_element(codes.begin(), codes.end());
  if (*lo == *hi) {
    mean = *lo;
    return;
  }
  mean = std::accumulate(codes.begin(), codes.end(), 0.0) / static_cast<double>(codes.size());
  double ss = 0.0;
  for (double c : codes) ss += (c - mean) * (c - mean);
  stdev = std::sqrt(ss / static_cast<double>(codes.size()));
}

std::vector<std::string> distinct_sorted(std::span<const std::string> labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::string_view to_string(ColumnType type) noexcept {
  return type == ColumnType::numeric ? "numeric" : "categorical";
}

void add_type_override(TypeOverrides& overrides, std::string_view assignment) {
  const auto eq = assignment.rfind('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("column type '" + std::string(assignment) + "' is not name=numeric|categorical");
  }
  const std::string name = trim(assignment.substr(0, eq));
  const std::string type = trim(assignment.substr(eq + 1));
  if (type == "numeric") {
    overrides[name] = ColumnType::numeric;
  } else if (type == "categorical") {
    overrides[name] = ColumnType::categorical;
  } else {
    throw ConfigError("column type for '" + name + "' must be numeric or categorical, got '" +
                      type + "'");
  }
}

RawTable read_csv(std::istream& in, std::string_view label_column, const TypeOverrides& overrides,
                  bool label_optional) {
  std::size_t line = 0;
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields, line)) throw ParseError("missing header row", 1);
  for (auto& f : fields) f = trim(f);
  const std::size_t width = fields.size();

  RawTable table;
  table.label_column = std::string(label_column);
  std::optional<std::size_t> label_pos;
  std::vector<std::size_t> feature_pos;
  for (std::size_t c = 0; c < width; ++c) {
    if (std::count(fields.begin(), fields.end(), fields[c]) > 1) {
      throw ParseError("duplicate column '" + fields[c] + "'", line);
    }
    if (fields[c] == label_column) {
      label_pos = c;
    } else {
      feature_pos.push_back(c);
      table.feature_names.push_back(fields[c]);
    }
  }
  if (!label_pos && !label_optional) {
    throw DataError("label column '" + std::string(label_column) + "' not found in header");
  }
  for (const auto& [name, type] : overrides) {
    if (std::find(table.feature_names.begin(), table.feature_names.end(), name) ==
        table.feature_names.end()) {
      throw ConfigError("column type override names unknown column '" + name + "'");
    }
  }
  table.labelled = label_pos.has_value();
  table.columns.resize(feature_pos.size());

  while (csv::read_record(in, fields, line)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line);
    }
    if (label_pos) {
      std::string label = trim(fields[*label_pos]);
      if (label.empty()) throw ParseError("empty label", line);
      table.labels.push_back(std::move(label));
    }
    for (std::size_t j = 0; j < feature_pos.size(); ++j) {
      table.columns[j].push_back(trim(fields[feature_pos[j]]));
    }
    ++table.row_count;
  }

  table.types.resize(feature_pos.size());
  for (std::size_t j = 0; j < feature_pos.size(); ++j) {
    if (auto it = overrides.find(table.feature_names[j]); it != overrides.end()) {
      table.types[j] = it->second;
      continue;
    }
    const bool numeric = std::all_of(table.columns[j].begin(), table.columns[j].end(),
                                     [](const std::string& cell) {
                                       return cell.empty() || parse_real(cell).has_value();
                                     });
    table.types[j] = numeric ? ColumnType::numeric : ColumnType::categorical;
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, std::string_view label_column,
                  const TypeOverrides& overrides, bool label_optional) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_csv(in, label_column, overrides, label_optional);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

SplitAssignment split_stratified(std::span<const std::string> labels, double train_fraction,
                                 std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  }
  const std::vector<std::string> classes = distinct_sorted(labels);
  if (classes.size() < 2) throw DataError("stratified split: need at least 2 classes");

  std::vector<std::vector<std::size_t>> members(classes.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
    members[k].push_back(i);
  }

  constexpr double kRoundingSlack = 1e-9;
  std::vector<std::size_t> take(classes.size());
  std::vector<double> exact(classes.size());
  std::size_t total = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const std::size_t nk = members[k].size();
    if (nk < 2) {
      throw DataError("stratified split: class '" + classes[k] + "' has fewer than 2 samples");
    }
    exact[k] = train_fraction * static_cast<double>(nk);
    take[k] = static_cast<std::size_t>(std::floor(exact[k] + 0.5 + kRoundingSlack));
    total += take[k];
  }
  const auto target = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(labels.size()) + 0.5 + kRoundingSlack));

  // Move one row at a time, preferring classes whose rounding erred most in
  // the offending direction, then larger classes, then lower index.
  std::vector<bool> adjusted(classes.size(), false);
  while (total != target) {
    const bool trim_train = total > target;
    std::optional<std::size_t> best;
    double best_err = 0.0;
    for (int pass = 0; pass < 2 && !best; ++pass) {
      for (std::size_t k = 0; k < classes.size(); ++k) {
        if (pass == 0 && adjusted[k]) continue;
        const std::size_t nk = members[k].size();
        if (trim_train ? take[k] <= 1 : take[k] + 1 >= nk) continue;
        const double err = trim_train ? static_cast<double>(take[k]) - exact[k]
                                      : exact[k] - static_cast<double>(take[k]);
        if (!best || err > best_err ||
            (err == best_err && nk > members[*best].size())) {
          best = k;
          best_err = err;
        }
      }
    }
    if (!best) throw DataError("stratified split: cannot reach the requested training size");
    adjusted[*best] = true;
    if (trim_train) {
      --take[*best];
      --total;
    } else {
      ++take[*best];
      ++total;
    }
  }

  SplitAssignment split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  Rng rng(seed);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    auto& rows = members[k];
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
    split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take[k]));
    split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(take[k]), rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void write_split_manifest(std::ostream& out, const SplitAssignment& split) {
  const std::size_t n = split.train.size() + split.test.size();
  std::vector<char> is_train(n, 0);
  for (std::size_t i : split.train) is_train[i] = 1;
  out << "index,subset\n";
  for (std::size_t i = 0; i < n; ++i) out << i << ',' << (is_train[i] ? "train" : "test") << '\n';
}

SplitAssignment read_split_manifest(std::istream& in) {
  std::size_t line = 0;
  std::vector<std::string> fields;
  if (!csv::read_record(in, fields, line)) throw ParseError("empty split manifest", 1);
  SplitAssignment split;
  std::vector<std::size_t> seen;
  while (csv::read_record(in, fields, line)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != 2) throw ParseError("expected index,subset", line);
    const std::string idx = trim(fields[0]);
    std::size_t i = 0;
    const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), i);
    if (ec != std::errc{} || ptr != idx.data() + idx.size()) throw ParseError("bad row index", line);
    const std::string subset = trim(fields[1]);
    if (subset == "train") {
      split.train.push_back(i);
    } else if (subset == "test") {
      split.test.push_back(i);
    } else {
      throw ParseError("subset must be train or test", line);
    }
    seen.push_back(i);
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] != i) throw DataError("split manifest does not list every row exactly once");
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

double ColumnEncoder::code(std::string_view cell) const {
  if (type == ColumnType::numeric) {
    if (cell.empty()) return median;
    const auto v = parse_real(cell);
    if (!v) throw DataError("column '" + name + "': '" + std::string(cell) + "' is not numeric");
    return *v;
  }
  const std::string_view key = cell.empty() ? kMissingCategory : cell;
  const auto it = std::find(vocabulary.begin(), vocabulary.end(), key);
  return static_cast<double>(it - vocabulary.begin());
}

double ColumnEncoder::transform(std::string_view cell) const {
  return stdev > 0.0 ? (code(cell) - mean) / stdev : 0.0;
}

Encoding Encoding::fit(const RawTable& table, std::span<const std::size_t> train_rows) {
  Encoding enc;
  enc.label_column = table.label_column;
  for (std::size_t j = 0; j < table.feature_names.size(); ++j) {
    ColumnEncoder col;
    col.name = table.feature_names[j];
    col.type = table.types[j];
    const auto& cells = table.columns[j];
    std::vector<double> codes;
    codes.reserve(train_rows.size());
    if (col.type == ColumnType::numeric) {
      std::vector<double> present;
      for (std::size_t r : train_rows) {
        if (cells[r].empty()) continue;
        const auto v = parse_real(cells[r]);
        if (!v) {
          throw DataError("column '" + col.name + "': '" + cells[r] + "' in row " +
                          std::to_string(r) + " is not numeric");
        }
        present.push_back(*v);
      }
      col.median = median_of(present);
      for (std::size_t r : train_rows) codes.push_back(col.code(cells[r]));
    } else {
      std::unordered_map<std::string, std::size_t> freq;
      for (std::size_t r : train_rows) {
        ++freq[cells[r].empty() ? std::string(kMissingCategory) : cells[r]];
      }
      std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
      std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
      });
      std::unordered_map<std::string, std::size_t> position;
      for (auto& [value, count] : entries) {
        position.emplace(value, col.vocabulary.size());
        col.vocabulary.push_back(value);
      }
      for (std::size_t r : train_rows) {
        codes.push_back(static_cast<double>(
            position.at(cells[r].empty() ? std::string(kMissingCategory) : cells[r])));
      }
    }
    standardize_stats(codes, col.mean, col.stdev);
    enc.columns.push_back(std::move(col));
  }
  return enc;
}

DenseMatrix Encoding::transform(const RawTable& table) const {
  for (const auto& name : table.feature_names) {
    const bool known = std::any_of(columns.begin(), columns.end(),
                                   [&](const ColumnEncoder& c) { return c.name == name; });
    if (!known) throw DataError("unexpected column '" + name + "'");
  }
  DenseMatrix x(table.rows(), columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const ColumnEncoder& col = columns[j];
    const auto it = std::find(table.feature_names.begin(), table.feature_names.end(), col.name);
    if (it == table.feature_names.end()) throw DataError("missing column '" + col.name + "'");
    const auto& cells = table.columns[static_cast<std::size_t>(it - table.feature_names.begin())];
    if (col.type == ColumnType::numeric) {
      for (std::size_t r = 0; r < table.rows(); ++r) x(r, j) = col.transform(cells[r]);
      continue;
    }
    std::unordered_map<std::string_view, double> lookup;
    for (std::size_t v = 0; v < col.vocabulary.size(); ++v) {
      lookup.emplace(col.vocabulary[v], static_cast<double>(v));
    }
    const double unseen = static_cast<double>(col.vocabulary.size());
    for (std::size_t r = 0; r < table.rows(); ++r) {
      const std::string_view key = cells[r].empty() ? kMissingCategory : std::string_view(cells[r]);
      const auto hit = lookup.find(key);
      const double code = hit == lookup.end() ? unseen : hit->second;
      x(r, j) = col.stdev > 0.0 ? (code - col.mean) / col.stdev : 0.0;
    }
  }
  return x;
}

std::vector<std::string> Encoding::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::vector<std::string> Dataset::train_labels() const {
  std::vector<std::string> out;
  for (std::size_t i : split.train) out.push_back(labels[i]);
  return out;
}

std::vector<std::string> Dataset::test_labels() const {
  std::vector<std::string> out;
  for (std::size_t i : split.test) out.push_back(labels[i]);
  return out;
}

std::vector<std::size_t> Dataset::train_label_index() const {
  std::vector<std::size_t> out;
  for (std::size_t i : split.train) out.push_back(label_index[i]);
  return out;
}

Dataset encode_and_normalize(const RawTable& table, const SplitAssignment& split) {
  if (!table.labelled) throw DataError("dataset has no label column");
  const std::size_t n = table.rows();
  std::vector<char> seen(n, 0);
  for (const auto* part : {&split.train, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= n) throw DataError("split index " + std::to_string(i) + " is out of range");
      if (seen[i]) throw DataError("split index " + std::to_string(i) + " is assigned twice");
      seen[i] = 1;
    }
  }
  if (split.train.empty()) throw DataError("split has no training rows");

  Dataset ds;
  ds.split = split;
  ds.encoding = Encoding::fit(table, split.train);
  ds.x = ds.encoding.transform(table);
  ds.feature_names = table.feature_names;
  ds.labels = table.labels;
  ds.class_names = distinct_sorted(table.labels);
  ds.label_index.reserve(n);
  for (const auto& label : ds.labels) {
    ds.label_index.push_back(static_cast<std::size_t>(
        std::lower_bound(ds.class_names.begin(), ds.class_names.end(), label) -
        ds.class_names.begin()));
  }
  return ds;
}

std::string_view to_string(SynthKind kind) noexcept {
  switch (kind) {
    case SynthKind::two_gaussians:
      return "two_gaussians";
    case SynthKind::planted_feature:
      return "planted_feature";
    case SynthKind::xor_gaussians:
      return "xor";
  }
  return "unknown";
}

SynthKind parse_synth_kind(std::string_view token) {
  if (token == "two_gaussians") return SynthKind::two_gaussians;
  if (token == "planted_feature") return SynthKind::planted_feature;
  if (token == "xor") return SynthKind::xor_gaussians;
  throw ConfigError("unknown synthetic kind '" + std::string(token) +
                    "' (expected two_gaussians|planted_feature|xor)");
}

SyntheticData synth_dataset(const SynthOptions& o) {
  if (o.n < 20) throw ConfigError("synthetic datasets need n >= 20");
  if (o.d < 2) throw ConfigError("synthetic datasets need d >= 2");
  if (o.kind == SynthKind::planted_feature && o.classes < 2) {
    throw ConfigError("planted_feature needs at least 2 classes");
  }
  SyntheticData out;
  out.x = DenseMatrix(o.n, o.d);
  for (std::size_t j = 0; j < o.d; ++j) out.feature_names.push_back("f" + std::to_string(j));
  Rng rng(o.seed);

  switch (o.kind) {
    case SynthKind::two_gaussians:
      for (std::size_t i = 0; i < o.n; ++i) {
        const std::size_t cls = i % 2;
        const double mean = cls == 0 ? -o.offset : o.offset;
        for (std::size_t j = 0; j < o.d; ++j) out.x(i, j) = mean + rng.normal();
        out.labels.push_back(std::to_string(cls));
      }
      break;
    case SynthKind::planted_feature: {
      const std::size_t informative = rng.index(o.d);
      out.informative_feature = informative;
      for (std::size_t i = 0; i < o.n; ++i) {
        const std::size_t cls = i % o.classes;
        const double mean =
            -2.0 + 4.0 * static_cast<double>(cls) / static_cast<double>(o.classes - 1);
        for (std::size_t j = 0; j < o.d; ++j) {
          out.x(i, j) = j == informative ? mean + 0.1 * rng.normal() : rng.normal();
        }
        out.labels.push_back(std::to_string(cls));
      }
      break;
    }
    case SynthKind::xor_gaussians:
      for (std::size_t i = 0; i < o.n; ++i) {
        const std::size_t quadrant = i % 4;
        const double sx = (quadrant & 1) ? 1.0 : -1.0;
        const double sy = (quadrant & 2) ? 1.0 : -1.0;
        for (std::size_t j = 0; j < o.d; ++j) {
          const double centre = j == 0 ? sx * o.offset : j == 1 ? sy * o.offset : 0.0;
          out.x(i, j) = centre + rng.normal();
        }
        out.labels.push_back(sx == sy ? "0" : "1");
      }
      break;
  }
  return out;
}

RawTable SyntheticData::to_table(std::string_view label_column) const {
  RawTable t;
  t.label_column = std::string(label_column);
  t.feature_names = feature_names;
  t.types.assign(feature_names.size(), ColumnType::numeric);
  t.columns.assign(feature_names.size(), {});
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) t.columns[j].push_back(format_real(x(i, j)));
  }
  t.labels = labels;
  t.labelled = true;
  t.row_count = x.rows();
  return t;
}

void SyntheticData::write_csv(std::ostream& out, std::string_view label_column) const {
  for (const auto& name : feature_names) out << csv::field(name) << ',';
  out << csv::field(label_column) << '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out << format_real(x(i, j)) << ',';
    out << csv::field(labels[i]) << '\n';
  }
}

}  // namespace hpelm
