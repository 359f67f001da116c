#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hpelm/linalg.hpp"

namespace hpelm {

enum class RankingMethod { f_score, fisher };

std::string_view to_string(RankingMethod method) noexcept;
RankingMethod parse_ranking_method(std::string_view token);

// Score given to a feature whose within-class variance is zero while its
// class means differ.
inline constexpr double kSeparatorScore = 1e12;

struct FeatureRanking {
  RankingMethod method = RankingMethod::f_score;
  std::vector<double> scores;
  // Feature indices by descending score, ties to the lower index.
  std::vector<std::size_t> order;
};

// Two-class F-score per feature:
//   [(mean⁺ − mean)² + (mean⁻ − mean)²] / [var⁺ + var⁻]
// with unbiased (n − 1) class variances.
FeatureRanking f_score(const DenseMatrix& x, std::span<const std::size_t> labels);

// Fisher score per feature:
//   Σₖ nₖ (meanₖ − mean)² / Σₖ nₖ varₖ
// with population class variances.
FeatureRanking fisher_score(const DenseMatrix& x, std::span<const std::size_t> labels);

FeatureRanking rank_features(RankingMethod method, const DenseMatrix& x,
                             std::span<const std::size_t> labels);

std::vector<std::size_t> select_top_k(const FeatureRanking& ranking, std::size_t k);

// "[3 7 1]"
std::string format_priority_list(std::span<const std::size_t> features);

// CSV with header feature_index,feature_name,method,score,rank (rank is 1-based).
void write_ranking_csv(std::ostream& out, const FeatureRanking& ranking,
                       std::span<const std::string> feature_names);

}  // namespace hpelm
