#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spd {

/// Lowercases, splits on whitespace and detaches ASCII punctuation into
/// single-character tokens. An apostrophe between two alphanumerics stays
/// inside the word ("i'm", "don't").
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace spd
