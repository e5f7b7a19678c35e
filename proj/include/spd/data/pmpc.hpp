#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spd/data/dialogue_io.hpp"
#include "spd/data/padded.hpp"
#include "spd/data/vocab.hpp"
#include "spd/rng.hpp"

namespace spd {

using Persona = std::vector<std::string>;

struct TruncationLimits {
  std::size_t max_utterance_tokens = 20;
  std::size_t max_utterances = 8;
  std::size_t max_profile_tokens = 15;
  std::size_t max_profiles = 5;

  void validate() const;
};

struct CandidateSet {
  std::vector<std::string> context;  // the target speaker's utterances, in order
  std::vector<Persona> candidates;
  std::size_t correct_index = 0;
  std::string split;

  const Persona& correct() const { return candidates.at(correct_index); }
};

struct PmpcConfig {
  PersonaVariant variant = PersonaVariant::Revised;
  std::size_t n_train = 1;
  std::size_t n_eval = 9;
  std::uint64_t seed = 0;
};

struct PmpcSplits {
  std::vector<CandidateSet> train, valid, test;
  std::size_t skipped_speakers = 0;  // no utterances or no profiles
};

/// Distinct personas in order of first appearance.
std::vector<Persona> persona_pool(const std::vector<Dialogue>& dialogues);
std::vector<Persona> persona_pool(const std::vector<CandidateSet>& sets);

/// N distinct personas drawn uniformly without replacement from the pool,
/// never equal to `correct`.
std::vector<Persona> sample_distractors(const std::vector<Persona>& pool, const Persona& correct,
                                        std::size_t n, Rng& rng);

/// Two matched pairs per dialogue (one per speaker) with N distractors each;
/// the correct persona is placed at a uniformly random index.
std::vector<CandidateSet> build_candidate_sets(const std::vector<Dialogue>& dialogues,
                                               const std::string& split, std::size_t n,
                                               std::uint64_t seed, std::size_t* skipped = nullptr);

PmpcSplits build_pmpc_splits(const DialogueSplits& dialogues, const PmpcConfig& config);

struct SplitStats {
  std::size_t pairs = 0;
  double utterances_per_context = 0.0;
  double words_per_utterance = 0.0;
  double profiles_per_persona = 0.0;
  double words_per_profile = 0.0;
};

/// Averages over the matched (context, correct persona) pairs.
SplitStats compute_stats(const std::vector<CandidateSet>& sets);

/// Number of personas that occur in more than one split.
std::size_t shared_personas(const PmpcSplits& splits);

void write_candidate_sets(std::ostream& out, const std::vector<CandidateSet>& sets);
std::vector<CandidateSet> read_candidate_sets(std::istream& in);

/// Every tokenized utterance and profile of every candidate.
std::vector<std::vector<std::string>> token_corpus(const std::vector<CandidateSet>& sets);

PaddedSide encode_sentences(const std::vector<std::string>& sentences, const Vocab& vocab,
                            std::size_t max_sentences, std::size_t max_tokens);
PaddedSide encode_context(const std::vector<std::string>& utterances, const Vocab& vocab,
                          const TruncationLimits& limits);
PaddedSide encode_persona(const Persona& persona, const Vocab& vocab, const TruncationLimits& limits);

}  // namespace spd
