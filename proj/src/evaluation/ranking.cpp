#include "spd/evaluation/ranking.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "spd/errors.hpp"

namespace spd {

EncodedSet encode_set(const CandidateSet& cs, const Vocab& vocab, const TruncationLimits& limits) {
  EncodedSet e;
  e.context = encode_context(cs.context, vocab, limits);
  for (const auto& p : cs.candidates) e.candidates.push_back(encode_persona(p, vocab, limits));
  e.correct_index = cs.correct_index;
  return e;
}

std::vector<EncodedSet> encode_sets(const std::vector<CandidateSet>& sets, const Vocab& vocab,
                                    const TruncationLimits& limits) {
  std::vector<EncodedSet> out;
  out.reserve(sets.size());
  for (const auto& cs : sets) out.push_back(encode_set(cs, vocab, limits));
  return out;
}

RankingResult rank_candidates(const MatchModel& model, const EncodedSet& set,
                              std::size_t expected_distractors) {
  if (expected_distractors > 0) {
    require(set.candidates.size() == expected_distractors + 1,
            "candidate set has " + std::to_string(set.candidates.size()) + " candidates, expected " +
                std::to_string(expected_distractors + 1));
  }
  std::vector<double> scores;
  scores.reserve(set.candidates.size());
  for (const auto& p : set.candidates) scores.push_back(model.score(set.context, p));
  return rank_scores(std::move(scores), set.correct_index);
}

std::size_t worker_threads() {
  const char* env = std::getenv("SPD_NUM_THREADS");
  if (!env || !*env) return 1;
  try {
    return std::max<std::size_t>(1, std::stoul(env));
  } catch (const std::exception&) {
    throw ContractViolation(std::string("SPD_NUM_THREADS must be a positive integer, got '") + env + "'");
  }
}

std::vector<RankingResult> rank_all(const MatchModel& model, const std::vector<EncodedSet>& sets,
                                    std::size_t expected_distractors) {
  std::vector<RankingResult> out(sets.size());
  const std::size_t threads = std::min(worker_threads(), std::max<std::size_t>(1, sets.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < sets.size(); ++i) out[i] = rank_candidates(model, sets[i], expected_distractors);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < sets.size(); i += threads) {
          out[i] = rank_candidates(model, sets[i], expected_distractors);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace spd
