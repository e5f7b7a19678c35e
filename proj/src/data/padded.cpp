#include "spd/data/padded.hpp"

#include <algorithm>

#include "spd/encoders/embedding.hpp"
#include "spd/errors.hpp"

namespace spd {

std::size_t PaddedSide::valid_sentences() const {
  return static_cast<std::size_t>(std::count_if(sentence_mask.begin(), sentence_mask.end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

std::span<const std::int32_t> PaddedSide::row(std::size_t sentence) const {
  return std::span<const std::int32_t>(ids).subspan(sentence * max_tokens, max_tokens);
}

std::vector<std::int32_t> PaddedSide::tokens(std::size_t sentence) const {
  std::vector<std::int32_t> out;
  for (std::size_t t = 0; t < max_tokens; ++t) {
    const std::size_t i = sentence * max_tokens + t;
    if (token_mask[i] != 0) out.push_back(ids[i]);
  }
  return out;
}

std::vector<std::int32_t> PaddedSide::concatenated() const {
  std::vector<std::int32_t> out;
  for (std::size_t s = 0; s < max_sentences; ++s) {
    if (sentence_mask[s] == 0) continue;
    const auto part = tokens(s);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

PaddedSide pad_side(const std::vector<std::vector<std::int32_t>>& sentences,
                    std::size_t max_sentences, std::size_t max_tokens) {
  require(max_sentences > 0 && max_tokens > 0, "truncation limits must be positive");
  require(!sentences.empty(), "cannot pad an empty side");
  PaddedSide side;
  side.max_sentences = max_sentences;
  side.max_tokens = max_tokens;
  side.ids.assign(max_sentences * max_tokens, kPadId);
  side.token_mask.assign(max_sentences * max_tokens, 0);
  side.sentence_mask.assign(max_sentences, 0);

  const std::size_t keep = std::min(max_sentences, sentences.size());
  const std::size_t first = sentences.size() - keep;
  for (std::size_t s = 0; s < keep; ++s) {
    const auto& src = sentences[first + s];
    side.sentence_mask[s] = 1;
    if (src.empty()) {
      side.ids[s * max_tokens] = kUnkId;
      side.token_mask[s * max_tokens] = 1;
      continue;
    }
    const std::size_t n = std::min(max_tokens, src.size());
    for (std::size_t t = 0; t < n; ++t) {
      side.ids[s * max_tokens + t] = src[t];
      side.token_mask[s * max_tokens + t] = 1;
    }
  }
  return side;
}

}  // namespace spd
