#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace spd {

/// Token <-> id mapping. Id 0 is "<pad>", id 1 is "<unk>".
class Vocab {
 public:
  Vocab();
  explicit Vocab(std::vector<std::string> tokens);

  std::int32_t id(std::string_view token) const;  // kUnkId when absent
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Tokens sorted by (count desc, lexicographic); tokens seen fewer than
/// min_count times are left out and map to UNK.
Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count = 1);

}  // namespace spd
