#include "spd/matchers/aggregation.hpp"

#include <cmath>
#include <limits>

#include "spd/errors.hpp"

namespace spd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Forward pass shared by the plain and differentiable entry points. Records
// which entry each Max picked (or npos) and whether the clamp fired, so the
// backward pass can route gradient.
struct Trace {
  AggregationResult result;
  std::vector<std::size_t> best_profile;  // per utterance, Max only
  std::vector<bool> clamped;              // per utterance
  std::size_t best_utterance = SIZE_MAX;  // utterance Max only
};

Trace run(std::size_t rows, std::size_t cols, const double* values, ad::MaskView row_ok,
          ad::MaskView col_ok, const AggregationStrategy& strategy) {
  auto row_valid = [&](std::size_t m) { return row_ok.empty() || row_ok[m] != 0; };
  auto col_valid = [&](std::size_t n) { return col_ok.empty() || col_ok[n] != 0; };
  require(row_ok.empty() || row_ok.size() == rows, "aggregate_scores: utterance mask length mismatch");
  require(col_ok.empty() || col_ok.size() == cols, "aggregate_scores: profile mask length mismatch");
  bool any_row = false, any_col = false;
  for (std::size_t m = 0; m < rows; ++m) any_row = any_row || row_valid(m);
  for (std::size_t n = 0; n < cols; ++n) any_col = any_col || col_valid(n);
  require(any_row && any_col, "aggregate_scores: needs at least one valid utterance and profile");

  Trace trace;
  trace.result.per_utterance.assign(rows, 0.0);
  trace.best_profile.assign(rows, SIZE_MAX);
  trace.clamped.assign(rows, false);

  double total = strategy.utterance == Reduce::Sum ? 0.0 : kNegInf;
  for (std::size_t m = 0; m < rows; ++m) {
    if (!row_valid(m)) continue;
    double best = strategy.profile == Reduce::Max ? kNegInf : 0.0;
    for (std::size_t n = 0; n < cols; ++n) {
      if (!col_valid(n)) continue;
      const double s = values[m * cols + n];
      if (strategy.profile == Reduce::Max) {
        if (s > best) {
          best = s;
          trace.best_profile[m] = n;
        }
      } else {
        best = best + s;
      }
    }
    if (strategy.clamp_at_zero && !(best > 0.0)) {
      trace.clamped[m] = true;
      best = 0.0;
    }
    trace.result.per_utterance[m] = best;
    if (strategy.utterance == Reduce::Sum) {
      total = total + best;
    } else if (best > total) {
      total = best;
      trace.best_utterance = m;
    }
  }
  trace.result.total = total;
  trace.result.g = sigmoid(total);
  return trace;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::string_view to_string(Reduce r) { return r == Reduce::Max ? "max" : "sum"; }

Reduce parse_reduce(std::string_view name) {
  if (name == "max" || name == "Max") return Reduce::Max;
  if (name == "sum" || name == "Sum") return Reduce::Sum;
  throw ContractViolation("unknown reduction: " + std::string(name));
}

std::string AggregationStrategy::label() const {
  auto cap = [](Reduce r) { return r == Reduce::Max ? "Max" : "Sum"; };
  std::string out = std::string("Ps-") + cap(profile) + " & Us-" + cap(utterance);
  if (!clamp_at_zero) out += " (no clamp)";
  return out;
}

std::vector<AggregationStrategy> all_strategies(bool clamp_at_zero) {
  return {
      {Reduce::Max, Reduce::Sum, clamp_at_zero},
      {Reduce::Max, Reduce::Max, clamp_at_zero},
      {Reduce::Sum, Reduce::Max, clamp_at_zero},
      {Reduce::Sum, Reduce::Sum, clamp_at_zero},
  };
}

ScoreMatrix ScoreMatrix::dense(std::size_t utterances, std::size_t profiles,
                               std::vector<double> values) {
  require(values.size() == utterances * profiles, "score matrix values do not match its shape");
  return ScoreMatrix{utterances, profiles, std::move(values), ad::Mask(utterances, 1),
                     ad::Mask(profiles, 1)};
}

ScoreMatrix ScoreMatrix::from_profile_rows(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty() && !rows[0].empty(), "score table must be non-empty");
  const std::size_t profiles = rows.size();
  const std::size_t utterances = rows[0].size();
  std::vector<double> values(utterances * profiles);
  for (std::size_t n = 0; n < profiles; ++n) {
    require(rows[n].size() == utterances, "score table rows must have equal length");
    for (std::size_t m = 0; m < utterances; ++m) values[m * profiles + n] = rows[n][m];
  }
  return dense(utterances, profiles, std::move(values));
}

AggregationResult aggregate_scores(const ScoreMatrix& scores, const AggregationStrategy& strategy) {
  require(scores.values.size() == scores.utterances * scores.profiles,
          "score matrix values do not match its shape");
  return run(scores.utterances, scores.profiles, scores.values.data(), scores.utterance_valid,
             scores.profile_valid, strategy)
      .result;
}

ad::Var aggregate_scores(ad::Var scores, ad::MaskView utterance_valid, ad::MaskView profile_valid,
                         const AggregationStrategy& strategy) {
  const ad::Tensor& s = scores.value();
  const std::size_t rows = s.rows(), cols = s.cols();
  Trace trace = run(rows, cols, s.data(), utterance_valid, profile_valid, strategy);
  ad::Mask row_ok(utterance_valid.begin(), utterance_valid.end());
  ad::Mask col_ok(profile_valid.begin(), profile_valid.end());
  const double total = trace.result.total;
  return scores.graph()->record(
      "aggregate_scores", {scores}, ad::Tensor::scalar(total),
      [trace = std::move(trace), row_ok, col_ok, rows, cols, strategy](
          const ad::Tensor& dy, std::span<ad::Tensor* const> dx) {
        ad::Tensor& d = *dx[0];
        for (std::size_t m = 0; m < rows; ++m) {
          if (!row_ok.empty() && row_ok[m] == 0) continue;
          if (trace.clamped[m]) continue;
          if (strategy.utterance == Reduce::Max && m != trace.best_utterance) continue;
          if (strategy.profile == Reduce::Max) {
            d[m * cols + trace.best_profile[m]] += dy[0];
            continue;
          }
          for (std::size_t n = 0; n < cols; ++n) {
            if (col_ok.empty() || col_ok[n] != 0) d[m * cols + n] += dy[0];
          }
        }
      });
}

}  // namespace spd
