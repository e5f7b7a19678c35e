#pragma once

#include <cstddef>
#include <cstdint>

#include "spd/autodiff/tensor.hpp"
#include "spd/data/pmpc.hpp"

namespace spd {

/// Keyword-persona corpus. Every profile carries one keyword among filler
/// words; a context reflects some of its persona's profiles (each at most
/// once, by repeating the keyword) and adds filler-only noise utterances.
struct SyntheticConfig {
  std::size_t vocab_size = 200;  // keywords + fillers
  std::size_t keywords = 100;
  std::size_t train_pairs = 500;
  std::size_t eval_sets = 200;  // per evaluation split
  std::size_t n_train = 1;
  std::size_t n_eval = 9;
  std::size_t min_profiles = 4, max_profiles = 5;
  std::size_t reflected_profiles = 3;
  std::size_t noise_utterances = 2;
  std::size_t min_fillers = 1, max_fillers = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

PmpcSplits make_synthetic_splits(const SyntheticConfig& config);

/// Stand-in for pretrained vectors: N(0, sd^2) entries, zero PAD row.
ad::Tensor synthetic_word_vectors(std::size_t vocab_size, std::size_t dim, double sd, std::uint64_t seed);

}  // namespace spd
