#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spd/data/pmpc.hpp"
#include "spd/evaluation/metrics.hpp"
#include "spd/evaluation/ranking.hpp"
#include "spd/matchers/match_model.hpp"
#include "spd/training/loss.hpp"

namespace spd {

/// Encoded training split: contexts plus the split's persona pool.
struct TrainingData {
  std::vector<PaddedSide> contexts;
  std::vector<PaddedSide> personas;
  std::vector<std::size_t> correct;                    // pool index per context
  std::vector<std::vector<std::size_t>> distractors;   // stored distractors per context

  std::size_t size() const { return contexts.size(); }
};

TrainingData make_training_data(const std::vector<CandidateSet>& train, const Vocab& vocab,
                                const TruncationLimits& limits);

struct EpochRecord {
  std::size_t epoch = 0;
  std::uint64_t steps = 0;  // optimizer steps taken so far
  double train_loss = 0.0;  // mean of the epoch's batch losses
  double learning_rate = 0.0;
  std::optional<EvalMetrics> valid;
  bool best = false;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;  // validation R@1 of the selected epoch
};

// Called after every epoch; `model` holds that epoch's weights.
using EpochCallback = std::function<void(const EpochRecord&, const MatchModel&)>;

/// Mean binary cross-entropy minimization with Adam and staircase decay.
/// After each epoch the validation R@1 decides the best weights, which are
/// loaded back into `model` on return. Without validation data the last
/// epoch is selected.
RunRecord train(MatchModel& model, const TrainingData& data, const std::vector<EncodedSet>& valid,
                const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean loss of one (context, persona, label) example list in inference mode.
double mean_loss(const MatchModel& model, const TrainingData& data,
                 const std::vector<std::tuple<std::size_t, std::size_t, int>>& examples);

}  // namespace spd
