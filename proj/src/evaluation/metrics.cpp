#include "spd/evaluation/metrics.hpp"

#include <cmath>

#include "spd/errors.hpp"

namespace spd {

RankingResult rank_scores(std::vector<double> scores, std::size_t correct_index) {
  require(correct_index < scores.size(), "correct index out of range");
  RankingResult r;
  r.correct_index = correct_index;
  const double target = scores[correct_index];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(std::isfinite(scores[i]), "candidate score is not finite");
    if (i != correct_index && scores[i] >= target) ++r.rank;
  }
  r.scores = std::move(scores);
  return r;
}

double recall_at_k(std::span<const RankingResult> results, std::size_t k) {
  require(!results.empty(), "recall_at_k of an empty result list");
  require(k >= 1, "recall_at_k needs k >= 1");
  std::size_t hits = 0;
  for (const auto& r : results) {
    require(k <= r.scores.size(), "k exceeds the candidate count");
    hits += r.rank <= k ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double mrr(std::span<const RankingResult> results) {
  require(!results.empty(), "mrr of an empty result list");
  double total = 0.0;
  for (const auto& r : results) total += 1.0 / static_cast<double>(r.rank);
  return total / static_cast<double>(results.size());
}

EvalMetrics summarize(std::span<const RankingResult> results) {
  EvalMetrics m;
  m.sets = results.size();
  m.candidates = results.front().scores.size();
  m.r_at_1 = recall_at_k(results, 1);
  m.r_at_2 = m.candidates >= 2 ? recall_at_k(results, 2) : 1.0;
  m.r_at_5 = m.candidates >= 5 ? recall_at_k(results, 5) : 1.0;
  m.mrr = mrr(results);
  return m;
}

MetricSummary summarize_values(std::vector<double> values) {
  require(!values.empty(), "summary of no values");
  MetricSummary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.values = std::move(values);
  return s;
}

}  // namespace spd
