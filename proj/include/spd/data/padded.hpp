#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spd/autodiff/ops.hpp"

namespace spd {

/// One side of an example (context or persona) as a padded id grid of
/// max_sentences x max_tokens. PAD is id 0; masks mark real content.
struct PaddedSide {
  std::size_t max_sentences = 0;
  std::size_t max_tokens = 0;
  std::vector<std::int32_t> ids;
  ad::Mask token_mask;
  ad::Mask sentence_mask;

  std::size_t valid_sentences() const;
  std::span<const std::int32_t> row(std::size_t sentence) const;
  // Real tokens of one sentence, in order.
  std::vector<std::int32_t> tokens(std::size_t sentence) const;
  // Real tokens of all real sentences, concatenated in order.
  std::vector<std::int32_t> concatenated() const;
};

/// Truncates and pads id sequences: keeps the LAST max_sentences sentences
/// and the FIRST max_tokens tokens of each; an empty sentence becomes [UNK].
PaddedSide pad_side(const std::vector<std::vector<std::int32_t>>& sentences,
                    std::size_t max_sentences, std::size_t max_tokens);

}  // namespace spd
