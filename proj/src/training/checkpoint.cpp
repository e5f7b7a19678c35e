#include "spd/training/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spd/errors.hpp"

namespace spd {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'P', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, const T& v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

json to_json(const ModelConfig& c) {
  return {
      {"framing", c.framing == Framing::C2P ? "c2p" : "u2p"},
      {"family", c.family == Family::Esim ? "esim" : "sentence"},
      {"encoder",
       {{"kind", std::string(to_string(c.encoder.kind))},
        {"input_dim", c.encoder.input_dim},
        {"hidden", c.encoder.hidden},
        {"layers", c.encoder.layers},
        {"model_dim", c.encoder.model_dim},
        {"heads", c.encoder.heads},
        {"ff_dim", c.encoder.ff_dim},
        {"positional", c.encoder.positional}}},
      {"vocab_size", c.vocab_size},
      {"trainable_embeddings", c.trainable_embeddings},
      {"mlp_hidden", c.mlp_hidden},
      {"esim_projection", c.esim_projection},
      {"aggregation",
       {{"profile", std::string(to_string(c.aggregation.profile))},
        {"utterance", std::string(to_string(c.aggregation.utterance))},
        {"clamp_at_zero", c.aggregation.clamp_at_zero}}},
      {"dropout", c.dropout},
      {"bilinear_identity", c.bilinear_identity},
  };
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig c;
    const auto framing = j.at("framing").get<std::string>();
    const auto family = j.at("family").get<std::string>();
    if (framing != "c2p" && framing != "u2p") throw IoError("unknown framing '" + framing + "'");
    if (family != "esim" && family != "sentence") throw IoError("unknown family '" + family + "'");
    c.framing = framing == "c2p" ? Framing::C2P : Framing::U2P;
    c.family = family == "esim" ? Family::Esim : Family::SentenceEncoding;
    const json& e = j.at("encoder");
    c.encoder.kind = parse_encoder_kind(e.at("kind").get<std::string>());
    c.encoder.input_dim = e.at("input_dim").get<std::size_t>();
    c.encoder.hidden = e.at("hidden").get<std::size_t>();
    c.encoder.layers = e.at("layers").get<std::size_t>();
    c.encoder.model_dim = e.at("model_dim").get<std::size_t>();
    c.encoder.heads = e.at("heads").get<std::size_t>();
    c.encoder.ff_dim = e.at("ff_dim").get<std::size_t>();
    c.encoder.positional = e.at("positional").get<bool>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.trainable_embeddings = j.at("trainable_embeddings").get<bool>();
    c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
    c.esim_projection = j.at("esim_projection").get<std::size_t>();
    const json& a = j.at("aggregation");
    c.aggregation.profile = parse_reduce(a.at("profile").get<std::string>());
    c.aggregation.utterance = parse_reduce(a.at("utterance").get<std::string>());
    c.aggregation.clamp_at_zero = a.at("clamp_at_zero").get<bool>();
    c.dropout = j.at("dropout").get<double>();
    c.bilinear_identity = j.at("bilinear_identity").get<double>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("bad model config: ") + e.what());
  }
}

json to_json(const TruncationLimits& l) {
  return {{"max_utterance_tokens", l.max_utterance_tokens},
          {"max_utterances", l.max_utterances},
          {"max_profile_tokens", l.max_profile_tokens},
          {"max_profiles", l.max_profiles}};
}

TruncationLimits limits_from_json(const json& j) {
  TruncationLimits l;
  l.max_utterance_tokens = j.at("max_utterance_tokens").get<std::size_t>();
  l.max_utterances = j.at("max_utterances").get<std::size_t>();
  l.max_profile_tokens = j.at("max_profile_tokens").get<std::size_t>();
  l.max_profiles = j.at("max_profiles").get<std::size_t>();
  l.validate();
  return l;
}

std::string serialize_checkpoint(const MatchModel& model, const Vocab& vocab, const TruncationLimits& limits) {
  require(vocab.size() == model.config().vocab_size, "vocab size does not match the model");
  const ad::ParameterStore& store = model.params();
  json header = {{"config", to_json(model.config())}, {"vocab", vocab.tokens()}, {"limits", to_json(limits)}};
  header["tensors"] = json::array();
  for (std::size_t id = 0; id < store.size(); ++id) {
    header["tensors"].push_back({{"name", store.name(id)}, {"shape", store.value(id).shape()}});
  }
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  for (std::size_t id = 0; id < store.size(); ++id) {
    for (double v : store.value(id).storage()) put(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a checkpoint file");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto length = take<std::uint64_t>(bytes, pos);
  if (pos + length > bytes.size()) throw IoError("checkpoint is truncated");
  Checkpoint ck;
  try {
    const json header = json::parse(bytes.substr(pos, length));
    pos += length;
    ck.config = model_config_from_json(header.at("config"));
    ck.vocab = Vocab(header.at("vocab").get<std::vector<std::string>>());
    ck.limits = limits_from_json(header.at("limits"));
    for (const auto& t : header.at("tensors")) {
      ad::Tensor value(t.at("shape").get<ad::Shape>());
      for (std::size_t i = 0; i < value.numel(); ++i) value[i] = take<double>(bytes, pos);
      ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(value));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  } catch (const ContractViolation& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  }
  if (pos != bytes.size()) throw IoError("checkpoint has trailing bytes");
  return ck;
}

MatchModel Checkpoint::instantiate() const {
  MatchModel model(config, 0);
  ad::ParameterStore& store = model.params();
  if (store.size() != tensors.size()) throw IoError("checkpoint tensor count does not match its config");
  for (std::size_t id = 0; id < store.size(); ++id) {
    const auto& [name, value] = tensors[id];
    if (store.name(id) != name || !store.value(id).same_shape(value)) {
      throw IoError("checkpoint tensor '" + name + "' does not match the model layout");
    }
    store.value(id) = value;
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const MatchModel& model, const Vocab& vocab,
                     const TruncationLimits& limits) {
  const std::string bytes = serialize_checkpoint(model, vocab, limits);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace spd
