#include "spd/data/vocab.hpp"

#include <algorithm>
#include <map>

#include "spd/encoders/embedding.hpp"
#include "spd/errors.hpp"

namespace spd {

namespace {
const char* const kPadToken = "<pad>";
const char* const kUnkToken = "<unk>";
}  // namespace

Vocab::Vocab() : Vocab(std::vector<std::string>{kPadToken, kUnkToken}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  require(tokens_.size() >= 2 && tokens_[0] == kPadToken && tokens_[1] == kUnkToken,
          "vocab must start with <pad>, <unk>");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    require(!tokens_[i].empty(), "vocab contains an empty token");
    const bool fresh = index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second;
    require(fresh, "vocab contains a duplicate token: " + tokens_[i]);
  }
}

std::int32_t Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), "token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) {
      if (!t.empty() && t != kPadToken && t != kUnkToken) ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{kPadToken, kUnkToken};
  for (auto& [token, count] : entries) {
    if (count >= min_count) tokens.push_back(token);
  }
  return Vocab(std::move(tokens));
}

}  // namespace spd
