#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spd {

struct RankingResult {
  std::vector<double> scores;
  std::size_t correct_index = 0;
  std::size_t rank = 1;  // 1-based
};

/// Pessimistic ties: the correct candidate ranks after every other
/// candidate whose score is >= its own.
RankingResult rank_scores(std::vector<double> scores, std::size_t correct_index);

double recall_at_k(std::span<const RankingResult> results, std::size_t k);
double mrr(std::span<const RankingResult> results);

struct EvalMetrics {
  std::size_t sets = 0;
  std::size_t candidates = 0;
  double r_at_1 = 0.0, r_at_2 = 0.0, r_at_5 = 0.0;
  double mrr = 0.0;
};

EvalMetrics summarize(std::span<const RankingResult> results);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::vector<double> values;
};

MetricSummary summarize_values(std::vector<double> values);

}  // namespace spd
