#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spd {

enum class PersonaVariant { Original, Revised };

std::string to_string(PersonaVariant v);
PersonaVariant parse_persona_variant(std::string_view text);

struct Turn {
  int speaker = 0;  // 0 or 1
  std::string text;
};

struct Dialogue {
  std::array<std::string, 2> speakers{"0", "1"};
  std::vector<Turn> turns;
  std::array<std::vector<std::string>, 2> personas;
  std::string split;  // empty when the source does not say

  std::vector<std::string> utterances_of(int speaker) const;
};

/// Persona-Chat text layout: numbered lines restarting at 1 per dialogue,
/// "your persona:" / "partner's persona:" profile lines, and turn lines
/// "partner<TAB>self[<TAB><TAB>candidates]". __SILENCE__ turns are dropped.
std::vector<Dialogue> read_persona_chat_text(std::istream& in, const std::string& split);

/// One JSON object per line:
///   {"speakers": [a, b], "turns": [{"speaker": a, "text": ...}],
///    "personas": {a: [...], b: [...]},
///    "personas_original"/"personas_revised": optional per-variant overrides,
///    "split": optional "train" | "valid" | "test"}
std::vector<Dialogue> read_dialogue_jsonl(std::istream& in, PersonaVariant variant);
void write_dialogue_jsonl(std::ostream& out, const std::vector<Dialogue>& dialogues);

struct DialogueSplits {
  std::vector<Dialogue> train, valid, test;
};

inline constexpr std::array<const char*, 3> kSplitNames{"train", "valid", "test"};

/// Loads from a directory ({split}_both_{variant}.txt or {split}.jsonl) or
/// from a single JSON-Lines file. Dialogues without a split are assigned
/// 80/10/10 by seeded shuffle of persona-connected groups, so no persona is
/// shared across splits.
DialogueSplits load_dialogue_splits(const std::filesystem::path& path, PersonaVariant variant,
                                    std::uint64_t seed);

}  // namespace spd
