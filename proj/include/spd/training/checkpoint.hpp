#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spd/data/pmpc.hpp"
#include "spd/data/vocab.hpp"
#include "spd/matchers/match_model.hpp"

namespace spd {

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TruncationLimits& limits);
TruncationLimits limits_from_json(const nlohmann::json& j);

/// Model weights (including frozen embeddings), config, vocabulary and
/// truncation limits. Binary layout: "SPDCKPT\0", u32 version, u64 header
/// length, JSON header, then every tensor as little-endian f64 in store order.
struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  TruncationLimits limits;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;

  MatchModel instantiate() const;
};

std::string serialize_checkpoint(const MatchModel& model, const Vocab& vocab, const TruncationLimits& limits);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const MatchModel& model, const Vocab& vocab,
                     const TruncationLimits& limits);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spd
