#pragma once

#include <cstddef>
#include <vector>

#include "spd/data/pmpc.hpp"
#include "spd/evaluation/metrics.hpp"
#include "spd/matchers/match_model.hpp"

namespace spd {

struct EncodedSet {
  PaddedSide context;
  std::vector<PaddedSide> candidates;
  std::size_t correct_index = 0;
};

EncodedSet encode_set(const CandidateSet& cs, const Vocab& vocab, const TruncationLimits& limits);
std::vector<EncodedSet> encode_sets(const std::vector<CandidateSet>& sets, const Vocab& vocab,
                                    const TruncationLimits& limits);

/// Scores every candidate with the model's inference-mode logit. When
/// expected_distractors > 0 the set must hold exactly that many plus one.
RankingResult rank_candidates(const MatchModel& model, const EncodedSet& set,
                              std::size_t expected_distractors = 0);

/// Ranks every set. Sets are spread over worker threads (SPD_NUM_THREADS,
/// default 1); results keep input order.
std::vector<RankingResult> rank_all(const MatchModel& model, const std::vector<EncodedSet>& sets,
                                    std::size_t expected_distractors = 0);

std::size_t worker_threads();

}  // namespace spd
