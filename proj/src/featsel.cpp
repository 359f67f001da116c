#include "hpelm/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>

#include "hpelm/csv.hpp"
#include "hpelm/error.hpp"

namespace hpelm {

namespace {

struct ClassStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sq_dev = 0.0;  // Σ (x − mean)²
  bool constant = true;
};

// Rows grouped by distinct label value, in ascending label order.
std::vector<std::vector<std::size_t>> group_rows(const DenseMatrix& x,
                                                 std::span<const std::size_t> labels) {
  if (labels.size() != x.rows()) {
    throw ShapeError("feature ranking: " + std::to_string(x.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  std::map<std::size_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [label, rows] : by_label) {
    if (rows.size() < 2) {
      throw DataError("feature ranking: class " + std::to_string(label) + " has fewer than 2 samples");
    }
    groups.push_back(std::move(rows));
  }
  if (groups.size() < 2) throw DataError("feature ranking: need at least 2 classes");
  return groups;
}

ClassStats stats_of(const DenseMatrix& x, std::size_t feature, const std::vector<std::size_t>& rows) {
  ClassStats s;
  s.n = rows.size();
  const double first = x(rows.front(), feature);
  double sum = 0.0;
  for (std::size_t r : rows) {
    const double v = x(r, feature);
    sum += v;
    if (v != first) s.constant = false;
  }
  s.mean = s.constant ? first : sum / static_cast<double>(s.n);
  if (!s.constant) {
    for (std::size_t r : rows) {
      const double d = x(r, feature) - s.mean;
      s.sq_dev += d * d;
    }
  }
  return s;
}

std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

// Zero within-class spread: 0 if the feature is constant overall, otherwise
// the classes are perfectly separated by it.
double degenerate_score(const std::vector<ClassStats>& stats) {
  for (const auto& s : stats) {
    if (s.mean != stats.front().mean) return kSeparatorScore;
  }
  return 0.0;
}

template <typename ScoreFn>
FeatureRanking rank_with(RankingMethod method, const DenseMatrix& x,
                         const std::vector<std::vector<std::size_t>>& groups, ScoreFn score) {
  FeatureRanking out;
  out.method = method;
  out.scores.resize(x.cols());
  std::vector<ClassStats> stats(groups.size());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      stats[k] = stats_of(x, j, groups[k]);
      sum += stats[k].mean * static_cast<double>(stats[k].n);
      n += stats[k].n;
    }
    const bool all_constant =
        std::all_of(stats.begin(), stats.end(), [](const ClassStats& s) { return s.constant; });
    if (all_constant) {
      out.scores[j] = degenerate_score(stats);
    } else {
      out.scores[j] = score(stats, sum / static_cast<double>(n));
    }
    if (!std::isfinite(out.scores[j]) || out.scores[j] < 0.0) {
      throw NumericError("feature ranking: non-finite score for feature " + std::to_string(j));
    }
  }
  out.order = descending_order(out.scores);
  return out;
}

}  // namespace

std::string_view to_string(RankingMethod method) noexcept {
  return method == RankingMethod::f_score ? "f_score" : "fisher";
}

RankingMethod parse_ranking_method(std::string_view token) {
  if (token == "f_score") return RankingMethod::f_score;
  if (token == "fisher") return RankingMethod::fisher;
  throw ConfigError("unknown ranking method '" + std::string(token) + "' (expected f_score|fisher)");
}

FeatureRanking f_score(const DenseMatrix& x, std::span<const std::size_t> labels) {
  const auto groups = group_rows(x, labels);
  if (groups.size() != 2) {
    throw MethodDomainError("f_score needs exactly 2 classes, got " + std::to_string(groups.size()));
  }
  return rank_with(RankingMethod::f_score, x, groups,
                   [](const std::vector<ClassStats>& s, double mean) {
                     double num = 0.0, den = 0.0;
                     for (const auto& c : s) {
                       num += (c.mean - mean) * (c.mean - mean);
                       den += c.sq_dev / static_cast<double>(c.n - 1);
                     }
                     return num / den;
                   });
}

FeatureRanking fisher_score(const DenseMatrix& x, std::span<const std::size_t> labels) {
  const auto groups = group_rows(x, labels);
  return rank_with(RankingMethod::fisher, x, groups,
                   [](const std::vector<ClassStats>& s, double mean) {
                     double num = 0.0, den = 0.0;
                     for (const auto& c : s) {
                       num += static_cast<double>(c.n) * (c.mean - mean) * (c.mean - mean);
                       den += c.sq_dev;  // nₖ · varₖ
                     }
                     return num / den;
                   });
}

FeatureRanking rank_features(RankingMethod method, const DenseMatrix& x,
                             std::span<const std::size_t> labels) {
  return method == RankingMethod::f_score ? f_score(x, labels) : fisher_score(x, labels);
}

std::vector<std::size_t> select_top_k(const FeatureRanking& ranking, std::size_t k) {
  if (k < 1 || k > ranking.order.size()) {
    throw ConfigError("top-k: k = " + std::to_string(k) + " is outside [1, " +
                      std::to_string(ranking.order.size()) + "]");
  }
  return {ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::string format_priority_list(std::span<const std::size_t> features) {
  std::string out = "[";
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(features[i]);
  }
  return out + "]";
}

void write_ranking_csv(std::ostream& out, const FeatureRanking& ranking,
                       std::span<const std::string> feature_names) {
  out << "feature_index,feature_name,method,score,rank\n";
  char buf[64];
  for (std::size_t r = 0; r < ranking.order.size(); ++r) {
    const std::size_t j = ranking.order[r];
    std::snprintf(buf, sizeof buf, "%.9g", ranking.scores[j]);
    out << j << ',' << csv::field(j < feature_names.size() ? feature_names[j] : std::string{}) << ','
        << to_string(ranking.method) << ',' << buf << ',' << r + 1 << '\n';
  }
}

}  // namespace hpelm
