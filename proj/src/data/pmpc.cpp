#include "spd/data/pmpc.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "json.hpp"
#include "spd/data/tokenizer.hpp"
#include "spd/errors.hpp"

namespace spd {

using json = nlohmann::json;

void TruncationLimits::validate() const {
  require(max_utterance_tokens > 0 && max_utterances > 0 && max_profile_tokens > 0 && max_profiles > 0,
          "truncation limits must be positive");
}

namespace {

void add_unique(std::vector<Persona>& pool, std::set<Persona>& seen, const Persona& p) {
  if (!p.empty() && seen.insert(p).second) pool.push_back(p);
}

}  // namespace

std::vector<Persona> persona_pool(const std::vector<Dialogue>& dialogues) {
  std::vector<Persona> pool;
  std::set<Persona> seen;
  for (const auto& d : dialogues) {
    for (const auto& p : d.personas) add_unique(pool, seen, p);
  }
  return pool;
}

std::vector<Persona> persona_pool(const std::vector<CandidateSet>& sets) {
  std::vector<Persona> pool;
  std::set<Persona> seen;
  for (const auto& cs : sets) add_unique(pool, seen, cs.correct());
  return pool;
}

std::vector<Persona> sample_distractors(const std::vector<Persona>& pool, const Persona& correct,
                                        std::size_t n, Rng& rng) {
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i] != correct) others.push_back(i);
  }
  if (others.size() < n) {
    throw ConstructionError("persona pool has " + std::to_string(others.size()) +
                            " distractor candidates, " + std::to_string(n) + " needed");
  }
  std::vector<Persona> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k + rng.below(others.size() - k);
    std::swap(others[k], others[j]);
    out.push_back(pool[others[k]]);
  }
  return out;
}

std::vector<CandidateSet> build_candidate_sets(const std::vector<Dialogue>& dialogues,
                                               const std::string& split, std::size_t n,
                                               std::uint64_t seed, std::size_t* skipped) {
  const auto pool = persona_pool(dialogues);
  Rng rng(seed);
  std::vector<CandidateSet> out;
  for (const auto& d : dialogues) {
    for (int speaker : {0, 1}) {
      const Persona& persona = d.personas[static_cast<std::size_t>(speaker)];
      auto context = d.utterances_of(speaker);
      if (persona.empty() || context.empty()) {
        if (skipped) ++*skipped;
        continue;
      }
      CandidateSet cs;
      cs.context = std::move(context);
      cs.split = split;
      cs.candidates = sample_distractors(pool, persona, n, rng);
      cs.correct_index = rng.below(n + 1);
      cs.candidates.insert(cs.candidates.begin() + static_cast<std::ptrdiff_t>(cs.correct_index), persona);
      out.push_back(std::move(cs));
    }
  }
  return out;
}

PmpcSplits build_pmpc_splits(const DialogueSplits& dialogues, const PmpcConfig& config) {
  PmpcSplits out;
  out.train = build_candidate_sets(dialogues.train, "train", config.n_train, mix_seed(config.seed, 1),
                                   &out.skipped_speakers);
  out.valid = build_candidate_sets(dialogues.valid, "valid", config.n_eval, mix_seed(config.seed, 2),
                                   &out.skipped_speakers);
  out.test = build_candidate_sets(dialogues.test, "test", config.n_eval, mix_seed(config.seed, 3),
                                  &out.skipped_speakers);
  return out;
}

SplitStats compute_stats(const std::vector<CandidateSet>& sets) {
  SplitStats s;
  s.pairs = sets.size();
  if (sets.empty()) return s;
  std::size_t utterances = 0, utterance_words = 0, profiles = 0, profile_words = 0;
  for (const auto& cs : sets) {
    utterances += cs.context.size();
    for (const auto& u : cs.context) utterance_words += tokenize(u).size();
    profiles += cs.correct().size();
    for (const auto& p : cs.correct()) profile_words += tokenize(p).size();
  }
  const auto n = static_cast<double>(sets.size());
  s.utterances_per_context = static_cast<double>(utterances) / n;
  s.words_per_utterance = static_cast<double>(utterance_words) / static_cast<double>(utterances);
  s.profiles_per_persona = static_cast<double>(profiles) / n;
  s.words_per_profile = static_cast<double>(profile_words) / static_cast<double>(profiles);
  return s;
}

std::size_t shared_personas(const PmpcSplits& splits) {
  std::map<Persona, std::set<std::string>> where;
  for (const auto* sets : {&splits.train, &splits.valid, &splits.test}) {
    for (const auto& cs : *sets) where[cs.correct()].insert(cs.split);
  }
  std::size_t shared = 0;
  for (const auto& [p, s] : where) shared += s.size() > 1 ? 1 : 0;
  return shared;
}

void write_candidate_sets(std::ostream& out, const std::vector<CandidateSet>& sets) {
  for (const auto& cs : sets) {
    const json j = {{"context", cs.context},
                    {"candidates", cs.candidates},
                    {"correct_index", cs.correct_index},
                    {"split", cs.split}};
    out << j.dump() << '\n';
  }
}

std::vector<CandidateSet> read_candidate_sets(std::istream& in) {
  std::vector<CandidateSet> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      CandidateSet cs;
      cs.context = j.at("context").get<std::vector<std::string>>();
      cs.candidates = j.at("candidates").get<std::vector<Persona>>();
      cs.correct_index = j.at("correct_index").get<std::size_t>();
      cs.split = j.value("split", std::string());
      if (cs.context.empty() || cs.correct_index >= cs.candidates.size()) {
        throw IoError("empty context or correct_index out of range");
      }
      out.push_back(std::move(cs));
    } catch (const json::exception& e) {
      throw IoError("candidate set line " + std::to_string(line_no) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError("candidate set line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::vector<std::string>> token_corpus(const std::vector<CandidateSet>& sets) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& cs : sets) {
    for (const auto& u : cs.context) corpus.push_back(tokenize(u));
    for (const auto& p : cs.candidates) {
      for (const auto& profile : p) corpus.push_back(tokenize(profile));
    }
  }
  return corpus;
}

PaddedSide encode_sentences(const std::vector<std::string>& sentences, const Vocab& vocab,
                            std::size_t max_sentences, std::size_t max_tokens) {
  std::vector<std::vector<std::int32_t>> ids;
  ids.reserve(sentences.size());
  for (const auto& s : sentences) ids.push_back(vocab.encode(tokenize(s)));
  return pad_side(ids, max_sentences, max_tokens);
}

PaddedSide encode_context(const std::vector<std::string>& utterances, const Vocab& vocab,
                          const TruncationLimits& limits) {
  return encode_sentences(utterances, vocab, limits.max_utterances, limits.max_utterance_tokens);
}

PaddedSide encode_persona(const Persona& persona, const Vocab& vocab, const TruncationLimits& limits) {
  return encode_sentences(persona, vocab, limits.max_profiles, limits.max_profile_tokens);
}

}  // namespace spd
