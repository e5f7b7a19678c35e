#include "spd/data/synthetic.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "spd/errors.hpp"

namespace spd {

void SyntheticConfig::validate() const {
  require(keywords > 0 && keywords < vocab_size, "synthetic corpus needs keywords and fillers");
  require(min_profiles >= 1 && min_profiles <= max_profiles && max_profiles <= keywords,
          "bad synthetic profile counts");
  require(reflected_profiles <= min_profiles, "cannot reflect more profiles than a persona has");
  require(reflected_profiles + noise_utterances > 0, "synthetic context would be empty");
  require(min_fillers <= max_fillers, "bad synthetic filler counts");
  require(train_pairs > n_train && eval_sets > n_eval, "synthetic split too small for its distractors");
}

namespace {

class Generator {
 public:
  Generator(const SyntheticConfig& c, Rng& rng) : c_(c), rng_(rng) {}

  std::string sentence(const std::string* keyword) {
    const std::size_t fillers = c_.min_fillers + rng_.below(c_.max_fillers - c_.min_fillers + 1);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < fillers; ++i) words.push_back(filler());
    if (keyword) {
      const std::size_t at = rng_.below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), *keyword);
    }
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
  }

  // Persona is returned with its keywords so the context can reflect them.
  std::pair<Persona, std::vector<std::string>> persona() {
    const std::size_t n = c_.min_profiles + rng_.below(c_.max_profiles - c_.min_profiles + 1);
    std::vector<std::size_t> ids(c_.keywords);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    for (std::size_t k = 0; k < n; ++k) std::swap(ids[k], ids[k + rng_.below(ids.size() - k)]);
    Persona p;
    std::vector<std::string> keys;
    for (std::size_t k = 0; k < n; ++k) {
      keys.push_back("k" + std::to_string(ids[k]));
      p.push_back(sentence(&keys.back()));
    }
    return {p, keys};
  }

  std::vector<std::string> context(const std::vector<std::string>& keys) {
    std::vector<std::size_t> order(keys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng_.shuffle(order);
    std::vector<std::string> utts;
    for (std::size_t k = 0; k < c_.reflected_profiles; ++k) utts.push_back(sentence(&keys[order[k]]));
    for (std::size_t k = 0; k < c_.noise_utterances; ++k) utts.push_back(sentence(nullptr));
    rng_.shuffle(utts);
    return utts;
  }

 private:
  std::string filler() { return "f" + std::to_string(rng_.below(c_.vocab_size - c_.keywords)); }

  const SyntheticConfig& c_;
  Rng& rng_;
};

std::vector<CandidateSet> make_split(const SyntheticConfig& c, const std::string& split, std::size_t count,
                                     std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Generator gen(c, rng);
  std::vector<std::vector<std::string>> contexts;
  std::vector<Persona> personas;
  std::set<Persona> seen;
  while (personas.size() < count) {
    auto [p, keys] = gen.persona();
    if (!seen.insert(p).second) continue;
    contexts.push_back(gen.context(keys));
    personas.push_back(std::move(p));
  }
  std::vector<CandidateSet> out;
  for (std::size_t i = 0; i < count; ++i) {
    CandidateSet cs;
    cs.context = contexts[i];
    cs.split = split;
    cs.candidates = sample_distractors(personas, personas[i], n, rng);
    cs.correct_index = rng.below(n + 1);
    cs.candidates.insert(cs.candidates.begin() + static_cast<std::ptrdiff_t>(cs.correct_index), personas[i]);
    out.push_back(std::move(cs));
  }
  return out;
}

}  // namespace

PmpcSplits make_synthetic_splits(const SyntheticConfig& config) {
  config.validate();
  PmpcSplits out;
  out.train = make_split(config, "train", config.train_pairs, config.n_train, mix_seed(config.seed, 11));
  out.valid = make_split(config, "valid", config.eval_sets, config.n_eval, mix_seed(config.seed, 12));
  out.test = make_split(config, "test", config.eval_sets, config.n_eval, mix_seed(config.seed, 13));
  return out;
}

ad::Tensor synthetic_word_vectors(std::size_t vocab_size, std::size_t dim, double sd, std::uint64_t seed) {
  require(sd > 0.0, "word vector scale must be positive");
  Rng rng(seed);
  ad::Tensor t({vocab_size, dim});
  for (std::size_t i = dim; i < t.numel(); ++i) t[i] = sd * rng.normal();
  return t;
}

}  // namespace spd
