#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "spd/data/dialogue_io.hpp"
#include "spd/data/pmpc.hpp"
#include "spd/data/synthetic.hpp"
#include "spd/data/tokenizer.hpp"
#include "spd/encoders/embedding.hpp"
#include "spd/errors.hpp"

using namespace spd;

namespace {

Dialogue make_dialogue(int tag, std::size_t turns = 4) {
  Dialogue d;
  d.speakers = {"a" + std::to_string(tag), "b" + std::to_string(tag)};
  for (std::size_t t = 0; t < turns; ++t) {
    d.turns.push_back({static_cast<int>(t % 2), "turn " + std::to_string(t) + " of " + std::to_string(tag)});
  }
  d.personas[0] = {"i am persona " + std::to_string(2 * tag), "i like tea ."};
  d.personas[1] = {"i am persona " + std::to_string(2 * tag + 1)};
  return d;
}

std::vector<Persona> numbered_pool(std::size_t n) {
  std::vector<Persona> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back({"p" + std::to_string(i)});
  return pool;
}

// Real tokens of `kept` appear in `original` in the same order.
bool is_subsequence(const std::vector<std::string>& kept, const std::vector<std::string>& original) {
  std::size_t j = 0;
  for (const auto& t : original) {
    if (j < kept.size() && kept[j] == t) ++j;
  }
  return j == kept.size();
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", ",", "world", "!"});
  CHECK(tokenize("  i'm   fine  ") == std::vector<std::string>{"i'm", "fine"});
  CHECK(tokenize("'quoted'") == std::vector<std::string>{"'", "quoted", "'"});
  CHECK(tokenize("a...b") == std::vector<std::string>{"a", ".", ".", ".", "b"});
  CHECK(tokenize("").empty());
  CHECK(tokenize(" \t\n").empty());
}

TEST_CASE("build_vocab") {
  const std::vector<std::vector<std::string>> corpus{{"b", "a", "c"}, {"a", "b"}, {"a", ""}, {"d"}};
  SUBCASE("count desc then lexicographic, reserved ids first") {
    const Vocab v = build_vocab(corpus);
    CHECK(v.tokens() == std::vector<std::string>{"<pad>", "<unk>", "a", "b", "c", "d"});
    CHECK(v.id("a") == 2);
    CHECK(v.id("zzz") == kUnkId);
  }
  SUBCASE("deterministic") { CHECK(build_vocab(corpus) == build_vocab(corpus)); }
  SUBCASE("min_count") {
    const Vocab v = build_vocab(corpus, 2);
    CHECK(v.size() == 4);
    CHECK(v.id("c") == kUnkId);
    CHECK(v.id("b") == 3);
  }
  SUBCASE("empty tokens never enter") {
    for (const auto& t : build_vocab(corpus).tokens()) CHECK(!t.empty());
  }
}

TEST_CASE("pad_side truncation and masks") {
  SUBCASE("10 utterances keep the last 8 in order") {
    std::vector<std::vector<std::int32_t>> utts;
    for (int i = 1; i <= 10; ++i) utts.push_back({i + 10});
    const PaddedSide side = pad_side(utts, 8, 20);
    CHECK(side.valid_sentences() == 8);
    for (std::size_t s = 0; s < 8; ++s) CHECK(side.tokens(s) == std::vector<std::int32_t>{static_cast<int>(s) + 13});
  }
  SUBCASE("3 profiles pad to 5 with masked zero rows") {
    const PaddedSide side = pad_side({{2}, {3, 4}, {5}}, 5, 15);
    CHECK(side.sentence_mask == ad::Mask{1, 1, 1, 0, 0});
    for (std::size_t s = 3; s < 5; ++s) {
      for (std::int32_t id : side.row(s)) CHECK(id == kPadId);
    }
  }
  SUBCASE("25 tokens keep the first 20") {
    std::vector<std::int32_t> long_utt;
    for (int i = 0; i < 25; ++i) long_utt.push_back(i + 2);
    const PaddedSide side = pad_side({long_utt}, 8, 20);
    const auto kept = side.tokens(0);
    CHECK(kept.size() == 20);
    CHECK(kept == std::vector<std::int32_t>(long_utt.begin(), long_utt.begin() + 20));
  }
  SUBCASE("empty sentence becomes UNK") {
    const PaddedSide side = pad_side({{}}, 2, 3);
    CHECK(side.tokens(0) == std::vector<std::int32_t>{kUnkId});
  }
  SUBCASE("empty side and zero limits are rejected") {
    CHECK_THROWS_AS(pad_side({}, 2, 3), ContractViolation);
    CHECK_THROWS_AS(pad_side({{2}}, 0, 3), ContractViolation);
    TruncationLimits bad;
    bad.max_profiles = 0;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
  }
}

TEST_CASE("encoded tokens are a subsequence of the original text") {
  const std::vector<std::string> utts{"Well, I REALLY like hiking in the mountains near my home town every summer "
                                      "and winter too, honestly!",
                                      "ok"};
  std::vector<std::vector<std::string>> corpus;
  for (const auto& u : utts) corpus.push_back(tokenize(u));
  const Vocab vocab = build_vocab(corpus);
  const TruncationLimits limits;
  const PaddedSide side = encode_context(utts, vocab, limits);
  for (std::size_t s = 0; s < utts.size(); ++s) {
    std::vector<std::string> kept;
    for (std::int32_t id : side.tokens(s)) kept.push_back(vocab.token(id));
    CHECK(kept.size() <= limits.max_utterance_tokens);
    CHECK(is_subsequence(kept, tokenize(utts[s])));
  }
}

TEST_CASE("sample_distractors") {
  Rng rng(3);
  const auto pool = numbered_pool(10);
  SUBCASE("N = 0") { CHECK(sample_distractors(pool, pool[0], 0, rng).empty()); }
  SUBCASE("pool of exactly N + 1") {
    auto out = sample_distractors(pool, pool[4], 9, rng);
    std::set<Persona> got(out.begin(), out.end());
    CHECK(got.size() == 9);
    CHECK(got.count(pool[4]) == 0);
  }
  SUBCASE("deterministic") {
    Rng a(9), b(9);
    CHECK(sample_distractors(pool, pool[1], 5, a) == sample_distractors(pool, pool[1], 5, b));
  }
  SUBCASE("insufficient pool") { CHECK_THROWS_AS(sample_distractors(pool, pool[0], 10, rng), ConstructionError); }
  SUBCASE("uniform selection frequency") {
    const auto big = numbered_pool(100);
    std::map<Persona, int> count;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      for (const auto& p : sample_distractors(big, big[0], 9, rng)) ++count[p];
    }
    CHECK(count.count(big[0]) == 0);
    const double p = 9.0 / 99.0;
    const double sd = std::sqrt(draws * p * (1.0 - p));
    for (std::size_t i = 1; i < big.size(); ++i) {
      CHECK(std::abs(count[big[i]] - draws * p) <= 3.0 * sd + 1e-9);
    }
  }
}

TEST_CASE("build_candidate_sets") {
  std::vector<Dialogue> dialogues;
  for (int i = 0; i < 7; ++i) dialogues.push_back(make_dialogue(i));
  const auto sets = build_candidate_sets(dialogues, "valid", 9, 42);
  CHECK(sets.size() == 2 * dialogues.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& cs = sets[i];
    const Dialogue& d = dialogues[i / 2];
    const int speaker = static_cast<int>(i % 2);
    CHECK(cs.candidates.size() == 10);
    CHECK(cs.correct() == d.personas[static_cast<std::size_t>(speaker)]);
    CHECK(cs.context == d.utterances_of(speaker));
    std::set<Persona> distinct(cs.candidates.begin(), cs.candidates.end());
    CHECK(distinct.size() == 10);
    CHECK(cs.split == "valid");
  }
  SUBCASE("seeded") { CHECK(build_candidate_sets(dialogues, "valid", 9, 42)[3].candidates == sets[3].candidates); }
  SUBCASE("pool too small") { CHECK_THROWS_AS(build_candidate_sets(dialogues, "valid", 14, 1), ConstructionError); }
  SUBCASE("correct index is spread") {
    std::set<std::size_t> positions;
    for (const auto& cs : sets) positions.insert(cs.correct_index);
    CHECK(positions.size() > 3);
  }
}

TEST_CASE("Persona-Chat text layout") {
  std::istringstream in(
      "1 your persona: i like to ski .\n"
      "2 your persona: i have two dogs .\n"
      "3 partner's persona: i am a nurse .\n"
      "4 hi , how are you ?\tgreat , just got back from skiing .\t\tx|y\n"
      "5 __SILENCE__\tmy dogs are waiting .\n"
      "1 your persona: i hate rain .\n"
      "2 partner's persona: i sing .\n"
      "3 hello\thi !\n");
  const auto dialogues = read_persona_chat_text(in, "train");
  REQUIRE(dialogues.size() == 2);
  const Dialogue& d = dialogues[0];
  CHECK(d.personas[1] == std::vector<std::string>{"i like to ski .", "i have two dogs ."});
  CHECK(d.personas[0] == std::vector<std::string>{"i am a nurse ."});
  CHECK(d.utterances_of(0) == std::vector<std::string>{"hi , how are you ?"});
  CHECK(d.utterances_of(1) == std::vector<std::string>{"great , just got back from skiing .", "my dogs are waiting ."});
  CHECK(dialogues[1].personas[1] == std::vector<std::string>{"i hate rain ."});
  CHECK(d.split == "train");

  std::istringstream bad("x your persona: nope\n");
  CHECK_THROWS_AS(read_persona_chat_text(bad, "train"), IoError);
}

TEST_CASE("dialogue JSON-Lines round trip and variants") {
  std::vector<Dialogue> dialogues{make_dialogue(1), make_dialogue(2)};
  dialogues[1].split = "test";
  std::stringstream buf;
  write_dialogue_jsonl(buf, dialogues);
  const auto back = read_dialogue_jsonl(buf, PersonaVariant::Revised);
  REQUIRE(back.size() == 2);
  CHECK(back[0].turns.size() == dialogues[0].turns.size());
  CHECK(back[0].personas == dialogues[0].personas);
  CHECK(back[1].split == "test");

  std::istringstream variant(
      R"({"speakers":["x","y"],"turns":[{"speaker":"x","text":"hi"}],)"
      R"("personas":{"x":["orig x"],"y":["orig y"]},"personas_revised":{"x":["rev x"],"y":["rev y"]}})");
  std::stringstream copy(variant.str());
  CHECK(read_dialogue_jsonl(variant, PersonaVariant::Revised)[0].personas[0] == std::vector<std::string>{"rev x"});
  CHECK(read_dialogue_jsonl(copy, PersonaVariant::Original)[0].personas[0] == std::vector<std::string>{"orig x"});

  std::istringstream unknown(R"({"speakers":["x","y"],"turns":[{"speaker":"z","text":"hi"}],"personas":{}})");
  CHECK_THROWS_AS(read_dialogue_jsonl(unknown, PersonaVariant::Revised), IoError);
  std::istringstream broken("{not json\n");
  CHECK_THROWS_AS(read_dialogue_jsonl(broken, PersonaVariant::Revised), IoError);
  CHECK_THROWS_AS(parse_persona_variant("final"), ContractViolation);
}

TEST_CASE("candidate set JSON-Lines round trip") {
  std::vector<Dialogue> dialogues;
  for (int i = 0; i < 4; ++i) dialogues.push_back(make_dialogue(i));
  const auto sets = build_candidate_sets(dialogues, "test", 3, 5);
  std::stringstream buf;
  write_candidate_sets(buf, sets);
  const auto back = read_candidate_sets(buf);
  REQUIRE(back.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(back[i].context == sets[i].context);
    CHECK(back[i].candidates == sets[i].candidates);
    CHECK(back[i].correct_index == sets[i].correct_index);
    CHECK(back[i].split == "test");
  }
  std::istringstream bad(R"({"context":["a"],"candidates":[["p"]],"correct_index":3})");
  CHECK_THROWS_AS(read_candidate_sets(bad), IoError);
}

TEST_CASE("split assignment keeps personas disjoint") {
  std::vector<Dialogue> dialogues;
  for (int i = 0; i < 60; ++i) dialogues.push_back(make_dialogue(i));
  // Dialogues 10..14 share one persona; they must land in one split.
  for (int i = 10; i < 15; ++i) dialogues[static_cast<std::size_t>(i)].personas[1] = {"shared persona"};
  const auto path = std::filesystem::temp_directory_path() / "spd_test_dialogues.jsonl";
  {
    std::ofstream out(path);
    write_dialogue_jsonl(out, dialogues);
  }
  const auto splits = load_dialogue_splits(path, PersonaVariant::Revised, 3);
  std::filesystem::remove(path);
  CHECK(splits.train.size() + splits.valid.size() + splits.test.size() == 60);
  CHECK(splits.train.size() >= 40);
  CHECK(!splits.valid.empty());
  CHECK(!splits.test.empty());
  std::map<Persona, std::set<std::string>> where;
  for (const auto* part : {&splits.train, &splits.valid, &splits.test}) {
    for (const auto& d : *part) {
      for (const auto& p : d.personas) where[p].insert(d.split);
    }
  }
  for (const auto& [p, s] : where) CHECK(s.size() == 1);

  PmpcConfig config;
  config.n_eval = 3;
  const auto pmpc = build_pmpc_splits(splits, config);
  CHECK(pmpc.train.size() == 2 * splits.train.size());
  CHECK(shared_personas(pmpc) == 0);
  for (const auto& cs : pmpc.train) CHECK(cs.candidates.size() == 2);
  CHECK_THROWS_AS(load_dialogue_splits("/nonexistent/file.jsonl", PersonaVariant::Revised, 0), IoError);
}

TEST_CASE("compute_stats") {
  CandidateSet cs;
  cs.context = {"a b c", "d e"};
  cs.candidates = {{"x y", "z"}, {"q"}};
  cs.correct_index = 0;
  CandidateSet cs2 = cs;
  cs2.context = {"a"};
  cs2.candidates = {{"q"}, {"x y z"}};
  cs2.correct_index = 1;
  const SplitStats s = compute_stats({cs, cs2});
  CHECK(s.pairs == 2);
  CHECK(s.utterances_per_context == 1.5);
  CHECK(s.words_per_utterance == 2.0);
  CHECK(s.profiles_per_persona == 1.5);
  CHECK(s.words_per_profile == 2.0);
}

TEST_CASE("synthetic corpus") {
  SyntheticConfig config;
  config.seed = 4;
  const auto splits = make_synthetic_splits(config);
  CHECK(splits.train.size() == 500);
  CHECK(splits.valid.size() == config.eval_sets);
  std::set<std::string> words;
  for (const auto& sentence : token_corpus(splits.train)) words.insert(sentence.begin(), sentence.end());
  CHECK(words.size() <= config.vocab_size);
  for (const auto& cs : splits.test) {
    CHECK(cs.candidates.size() == 10);
    std::size_t noise = 0;
    std::map<std::string, int> reflected;
    std::set<std::string> keywords;
    for (const auto& profile : cs.correct()) {
      for (const auto& w : tokenize(profile)) {
        if (w[0] == 'k') keywords.insert(w);
      }
    }
    for (const auto& u : cs.context) {
      bool has_keyword = false;
      for (const auto& w : tokenize(u)) {
        if (w[0] != 'k') continue;
        has_keyword = true;
        CHECK(keywords.count(w) == 1);
        ++reflected[w];
      }
      noise += has_keyword ? 0 : 1;
    }
    CHECK(noise == config.noise_utterances);
    for (const auto& [w, n] : reflected) CHECK(n == 1);
  }
  CHECK(make_synthetic_splits(config).test[7].candidates == splits.test[7].candidates);
}
