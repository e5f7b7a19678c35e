#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "spd/autodiff/graph.hpp"
#include "spd/autodiff/ops.hpp"

namespace spd {

enum class Reduce { Max, Sum };

/// How the utterance x profile score matrix collapses to one score.
/// Default: best profile per utterance, floored at zero, summed over utterances.
struct AggregationStrategy {
  Reduce profile = Reduce::Max;
  Reduce utterance = Reduce::Sum;
  bool clamp_at_zero = true;

  // "Ps-Max & Us-Sum" style label.
  std::string label() const;
  friend bool operator==(const AggregationStrategy&, const AggregationStrategy&) = default;
};

std::string_view to_string(Reduce r);
Reduce parse_reduce(std::string_view name);

// The four profile/utterance combinations, default first.
std::vector<AggregationStrategy> all_strategies(bool clamp_at_zero = true);

/// Utterance (row) by profile (column) similarity scores with validity masks.
struct ScoreMatrix {
  std::size_t utterances = 0;
  std::size_t profiles = 0;
  std::vector<double> values;  // row-major, utterances x profiles
  ad::Mask utterance_valid;
  ad::Mask profile_valid;

  static ScoreMatrix dense(std::size_t utterances, std::size_t profiles, std::vector<double> values);
  // From a profiles x utterances table (the layout of a printed case study).
  static ScoreMatrix from_profile_rows(const std::vector<std::vector<double>>& rows);

  double at(std::size_t m, std::size_t n) const { return values[m * profiles + n]; }
  bool utterance_ok(std::size_t m) const { return utterance_valid[m] != 0; }
  bool profile_ok(std::size_t n) const { return profile_valid[n] != 0; }
};

struct AggregationResult {
  std::vector<double> per_utterance;  // s_m; 0 for padded utterances
  double total = 0.0;                  // s
  double g = 0.5;                      // sigmoid(s)
};

/// Collapses a score matrix. Padded rows/columns are skipped: they act as
/// -inf under Max and 0 under Sum.
AggregationResult aggregate_scores(const ScoreMatrix& scores, const AggregationStrategy& strategy);

/// Differentiable version over an utterances x profiles Var; returns the
/// total s as a 1 x 1 Var (subgradient routed to the selected maxima).
ad::Var aggregate_scores(ad::Var scores, ad::MaskView utterance_valid, ad::MaskView profile_valid,
                         const AggregationStrategy& strategy);

double sigmoid(double x);

}  // namespace spd
