#include "spd/data/dialogue_io.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "spd/errors.hpp"
#include "spd/rng.hpp"

namespace spd {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(PersonaVariant v) { return v == PersonaVariant::Original ? "original" : "revised"; }

PersonaVariant parse_persona_variant(std::string_view text) {
  if (text == "original") return PersonaVariant::Original;
  if (text == "revised") return PersonaVariant::Revised;
  throw ContractViolation("unknown persona variant '" + std::string(text) + "'");
}

std::vector<std::string> Dialogue::utterances_of(int speaker) const {
  std::vector<std::string> out;
  for (const auto& t : turns) {
    if (t.speaker == speaker) out.push_back(t.text);
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tabs(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = s.find('\t', start);
    out.push_back(s.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

constexpr int kPartner = 0;
constexpr int kSelf = 1;

}  // namespace

std::vector<Dialogue> read_persona_chat_text(std::istream& in, const std::string& split) {
  std::vector<Dialogue> out;
  std::string line;
  std::size_t line_no = 0;
  bool open = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto space = line.find(' ');
    long number = 0;
    try {
      number = std::stol(line.substr(0, space));
    } catch (const std::exception&) {
      throw IoError("line " + std::to_string(line_no) + ": missing line number");
    }
    if (number == 1 || !open) {
      out.emplace_back();
      out.back().speakers = {"partner", "self"};
      out.back().split = split;
      open = true;
    }
    Dialogue& d = out.back();
    const std::string body = space == std::string::npos ? std::string() : line.substr(space + 1);
    if (starts_with(body, "your persona:")) {
      d.personas[kSelf].push_back(trim(body.substr(13)));
    } else if (starts_with(body, "partner's persona:")) {
      d.personas[kPartner].push_back(trim(body.substr(18)));
    } else {
      const auto fields = split_tabs(body);
      if (fields.size() < 2) throw IoError("line " + std::to_string(line_no) + ": expected two tab-separated turns");
      for (int s : {kPartner, kSelf}) {
        const std::string text = trim(fields[static_cast<std::size_t>(s)]);
        if (!text.empty() && text != "__SILENCE__") d.turns.push_back({s, text});
      }
    }
  }
  return out;
}

namespace {

std::vector<std::string> string_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string()) throw IoError(what + " must be a list of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

Dialogue parse_dialogue(const json& j, PersonaVariant variant) {
  if (!j.is_object()) throw IoError("dialogue record must be an object");
  Dialogue d;
  const auto speakers = string_list(j.at("speakers"), "speakers");
  if (speakers.size() != 2 || speakers[0] == speakers[1]) throw IoError("speakers must name two distinct speakers");
  d.speakers = {speakers[0], speakers[1]};
  auto speaker_index = [&](const std::string& name) {
    if (name == d.speakers[0]) return 0;
    if (name == d.speakers[1]) return 1;
    throw IoError("unknown speaker '" + name + "'");
  };
  for (const auto& t : j.at("turns")) {
    d.turns.push_back({speaker_index(t.at("speaker").get<std::string>()), t.at("text").get<std::string>()});
  }
  const std::string override_key = "personas_" + to_string(variant);
  const json& personas = j.contains(override_key) ? j.at(override_key) : j.at("personas");
  if (!personas.is_object()) throw IoError("personas must map speaker to profiles");
  for (const auto& [name, profiles] : personas.items()) {
    d.personas[static_cast<std::size_t>(speaker_index(name))] = string_list(profiles, "profiles");
  }
  if (j.contains("split")) {
    d.split = j.at("split").get<std::string>();
    if (d.split != "train" && d.split != "valid" && d.split != "test") {
      throw IoError("unknown split '" + d.split + "'");
    }
  }
  return d;
}

}  // namespace

std::vector<Dialogue> read_dialogue_jsonl(std::istream& in, PersonaVariant variant) {
  std::vector<Dialogue> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_dialogue(json::parse(line), variant));
    } catch (const json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const IoError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_dialogue_jsonl(std::ostream& out, const std::vector<Dialogue>& dialogues) {
  for (const auto& d : dialogues) {
    json j;
    j["speakers"] = {d.speakers[0], d.speakers[1]};
    j["turns"] = json::array();
    for (const auto& t : d.turns) {
      j["turns"].push_back({{"speaker", d.speakers[static_cast<std::size_t>(t.speaker)]}, {"text", t.text}});
    }
    j["personas"] = {{d.speakers[0], d.personas[0]}, {d.speakers[1], d.personas[1]}};
    if (!d.split.empty()) j["split"] = d.split;
    out << j.dump() << '\n';
  }
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::vector<Dialogue>& bucket(DialogueSplits& s, const std::string& split) {
  if (split == "train") return s.train;
  if (split == "valid") return s.valid;
  return s.test;
}

// Union-find over dialogues sharing any persona string.
std::vector<std::size_t> persona_groups(const std::vector<Dialogue>& dialogues) {
  std::vector<std::size_t> parent(dialogues.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::map<std::vector<std::string>, std::size_t> owner;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    for (const auto& persona : dialogues[i].personas) {
      const auto [it, fresh] = owner.emplace(persona, i);
      if (!fresh) parent[find(i)] = find(it->second);
    }
  }
  std::vector<std::size_t> group(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) group[i] = find(i);
  return group;
}

void assign_splits(std::vector<Dialogue>& dialogues, std::uint64_t seed) {
  const auto group = persona_groups(dialogues);
  std::vector<std::size_t> roots;
  std::map<std::size_t, std::size_t> group_size;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    if (group[i] == i) roots.push_back(i);
    ++group_size[group[i]];
  }
  Rng rng(mix_seed(seed, 0x5b1170));
  rng.shuffle(roots);
  std::map<std::size_t, std::string> split_of;
  std::size_t assigned = 0;
  for (std::size_t r : roots) {
    const double frac = static_cast<double>(assigned) / static_cast<double>(dialogues.size());
    split_of[r] = frac < 0.8 ? "train" : frac < 0.9 ? "valid" : "test";
    assigned += group_size[r];
  }
  for (std::size_t i = 0; i < dialogues.size(); ++i) dialogues[i].split = split_of[group[i]];
}

}  // namespace

DialogueSplits load_dialogue_splits(const fs::path& path, PersonaVariant variant, std::uint64_t seed) {
  DialogueSplits out;
  if (fs::is_directory(path)) {
    for (const char* split : kSplitNames) {
      const fs::path text = path / (std::string(split) + "_both_" + to_string(variant) + ".txt");
      const fs::path jsonl = path / (std::string(split) + ".jsonl");
      if (fs::exists(text)) {
        auto in = open_input(text);
        bucket(out, split) = read_persona_chat_text(in, split);
      } else if (fs::exists(jsonl)) {
        auto in = open_input(jsonl);
        auto dialogues = read_dialogue_jsonl(in, variant);
        for (auto& d : dialogues) d.split = split;
        bucket(out, split) = std::move(dialogues);
      } else {
        throw IoError("no " + text.filename().string() + " or " + jsonl.filename().string() + " in " +
                      path.string());
      }
    }
    return out;
  }
  auto in = open_input(path);
  std::vector<Dialogue> all = read_dialogue_jsonl(in, variant);
  std::vector<Dialogue> unsplit;
  for (auto& d : all) {
    if (d.split.empty()) {
      unsplit.push_back(std::move(d));
    } else {
      bucket(out, d.split).push_back(std::move(d));
    }
  }
  assign_splits(unsplit, seed);
  for (auto& d : unsplit) bucket(out, d.split).push_back(std::move(d));
  return out;
}

}  // namespace spd
