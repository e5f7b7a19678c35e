#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spd/data/pmpc.hpp"
#include "spd/data/synthetic.hpp"
#include "spd/matchers/match_model.hpp"
#include "spd/training/loss.hpp"

namespace spd::cli {

inline constexpr const char* kVersion = "0.1.0";

// Bad config key or value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat run configuration. Every key has a typed default; overrides must
/// name a known key and parse as the default's type.
class RunConfig {
 public:
  RunConfig();

  // Flat "key = value" lines ('#' comments) or a JSON object.
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text);
  void set(const std::string& key, const std::string& value);
  void set_json(const std::string& key, const nlohmann::json& value);

  const nlohmann::json& values() const { return values_; }
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  ModelConfig model_config(std::size_t vocab_size) const;
  TrainConfig train_config(std::uint64_t seed) const;
  TruncationLimits limits() const;
  SyntheticConfig synthetic_config(std::uint64_t seed) const;
  PmpcConfig pmpc_config(std::uint64_t seed) const;

  // FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

 private:
  nlohmann::json values_;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace spd::cli
