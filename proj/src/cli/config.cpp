#include "spd/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spd/errors.hpp"

namespace spd::cli {

namespace {

nlohmann::json defaults() {
  nlohmann::json j;
  j["model"] = "u2p-bow";
  j["embedding_dim"] = 300;
  j["hidden"] = 200;
  j["layers"] = 1;
  j["model_dim"] = 0;
  j["heads"] = 4;
  j["ff_dim"] = 256;
  j["positional"] = true;
  j["mlp_hidden"] = 256;
  j["esim_projection"] = 0;
  j["dropout"] = 0.2;
  j["trainable_embeddings"] = false;
  j["bilinear_identity"] = 1.0;
  j["profile_reduce"] = "max";
  j["utterance_reduce"] = "sum";
  j["clamp_at_zero"] = true;
  // "random", "gaussian" or a word-vector file path
  j["embeddings"] = "random";
  j["embedding_sd"] = 0.2;

  j["learning_rate"] = 1e-3;
  j["decay_factor"] = 0.96;
  j["decay_steps"] = 5000;
  j["batch_size"] = 32;
  j["epochs"] = 20;
  j["max_steps"] = 0;
  j["n_train"] = 1;
  j["resample_distractors"] = true;
  j["adam_beta1"] = 0.9;
  j["adam_beta2"] = 0.999;
  j["adam_epsilon"] = 1e-8;

  j["max_utterance_tokens"] = 20;
  j["max_utterances"] = 8;
  j["max_profile_tokens"] = 15;
  j["max_profiles"] = 5;
  j["min_count"] = 1;

  j["variant"] = "revised";
  j["n_eval"] = 9;

  const SyntheticConfig s;
  j["synthetic.vocab_size"] = s.vocab_size;
  j["synthetic.keywords"] = s.keywords;
  j["synthetic.train_pairs"] = s.train_pairs;
  j["synthetic.eval_sets"] = s.eval_sets;
  j["synthetic.min_profiles"] = s.min_profiles;
  j["synthetic.max_profiles"] = s.max_profiles;
  j["synthetic.reflected_profiles"] = s.reflected_profiles;
  j["synthetic.noise_utterances"] = s.noise_utterances;
  j["synthetic.min_fillers"] = s.min_fillers;
  j["synthetic.max_fillers"] = s.max_fillers;
  return j;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  merge_text(text.str());
}

void RunConfig::merge_text(std::string_view text) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) set_json(key, value);
    return;
  }
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    set(trim(std::string_view(content).substr(0, eq)), trim(std::string_view(content).substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  const auto bad = [&] { return ConfigError("bad value for '" + key + "': '" + value + "'"); };
  if (it->is_boolean()) {
    if (value == "true" || value == "1") {
      *it = true;
    } else if (value == "false" || value == "0") {
      *it = false;
    } else {
      throw bad();
    }
  } else if (it->is_number_unsigned() || it->is_number_integer()) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size()) throw bad();
    *it = v;
  } else if (it->is_number_float()) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size()) throw bad();
    *it = v;
  } else {
    *it = value;
  }
}

void RunConfig::set_json(const std::string& key, const nlohmann::json& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  const bool ok = (it->is_boolean() && value.is_boolean()) ||
                  ((it->is_number_unsigned() || it->is_number_integer()) && value.is_number_unsigned()) ||
                  (it->is_number_float() && value.is_number()) || (it->is_string() && value.is_string());
  if (!ok) throw ConfigError("bad value for '" + key + "': " + value.dump());
  if (it->is_number_float()) {
    *it = value.get<double>();
  } else {
    *it = value;
  }
}

std::string RunConfig::get_string(const std::string& key) const { return values_.at(key).get<std::string>(); }
double RunConfig::get_double(const std::string& key) const { return values_.at(key).get<double>(); }
std::uint64_t RunConfig::get_uint(const std::string& key) const { return values_.at(key).get<std::uint64_t>(); }
bool RunConfig::get_bool(const std::string& key) const { return values_.at(key).get<bool>(); }

ModelConfig RunConfig::model_config(std::size_t vocab_size) const {
  ModelConfig c;
  try {
    c = ModelConfig::preset(get_string("model"), vocab_size);
    c.encoder.input_dim = get_uint("embedding_dim");
    c.encoder.hidden = get_uint("hidden");
    c.encoder.layers = get_uint("layers");
    c.encoder.model_dim = get_uint("model_dim");
    c.encoder.heads = get_uint("heads");
    c.encoder.ff_dim = get_uint("ff_dim");
    c.encoder.positional = get_bool("positional");
    c.mlp_hidden = get_uint("mlp_hidden");
    c.esim_projection = get_uint("esim_projection");
    c.dropout = get_double("dropout");
    c.trainable_embeddings = get_bool("trainable_embeddings");
    c.bilinear_identity = get_double("bilinear_identity");
    c.aggregation.profile = parse_reduce(get_string("profile_reduce"));
    c.aggregation.utterance = parse_reduce(get_string("utterance_reduce"));
    c.aggregation.clamp_at_zero = get_bool("clamp_at_zero");
    c.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return c;
}

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
  TrainConfig t;
  t.learning_rate = get_double("learning_rate");
  t.decay_factor = get_double("decay_factor");
  t.decay_steps = get_uint("decay_steps");
  t.batch_size = get_uint("batch_size");
  t.epochs = get_uint("epochs");
  t.max_steps = get_uint("max_steps");
  t.n_train = get_uint("n_train");
  t.resample_distractors = get_bool("resample_distractors");
  t.adam.beta1 = get_double("adam_beta1");
  t.adam.beta2 = get_double("adam_beta2");
  t.adam.epsilon = get_double("adam_epsilon");
  t.seed = seed;
  try {
    t.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return t;
}

TruncationLimits RunConfig::limits() const {
  TruncationLimits l;
  l.max_utterance_tokens = get_uint("max_utterance_tokens");
  l.max_utterances = get_uint("max_utterances");
  l.max_profile_tokens = get_uint("max_profile_tokens");
  l.max_profiles = get_uint("max_profiles");
  try {
    l.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return l;
}

SyntheticConfig RunConfig::synthetic_config(std::uint64_t seed) const {
  SyntheticConfig s;
  s.vocab_size = get_uint("synthetic.vocab_size");
  s.keywords = get_uint("synthetic.keywords");
  s.train_pairs = get_uint("synthetic.train_pairs");
  s.eval_sets = get_uint("synthetic.eval_sets");
  s.n_train = get_uint("n_train");
  s.n_eval = get_uint("n_eval");
  s.min_profiles = get_uint("synthetic.min_profiles");
  s.max_profiles = get_uint("synthetic.max_profiles");
  s.reflected_profiles = get_uint("synthetic.reflected_profiles");
  s.noise_utterances = get_uint("synthetic.noise_utterances");
  s.min_fillers = get_uint("synthetic.min_fillers");
  s.max_fillers = get_uint("synthetic.max_fillers");
  s.seed = seed;
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  return s;
}

PmpcConfig RunConfig::pmpc_config(std::uint64_t seed) const {
  PmpcConfig p;
  try {
    p.variant = parse_persona_variant(get_string("variant"));
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
  p.n_train = get_uint("n_train");
  p.n_eval = get_uint("n_eval");
  p.seed = seed;
  return p;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(values_.dump())));
  return buf;
}

}  // namespace spd::cli
