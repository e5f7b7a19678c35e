#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spd/autodiff/graph.hpp"
#include "spd/autodiff/ops.hpp"
#include "spd/encoders/lstm.hpp"
#include "spd/encoders/transformer.hpp"
#include "spd/rng.hpp"

namespace spd {

// Training/inference switch threaded through every forward pass.
struct ForwardMode {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;
};

ad::Var apply_dropout(ad::Var x, const ForwardMode& mode);

enum class EncoderKind { Bow, BiLstm, Transformer };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Bow;
  std::size_t input_dim = 300;   // word embedding size
  std::size_t hidden = 200;      // BiLSTM state size per direction
  std::size_t layers = 1;        // Transformer blocks
  std::size_t model_dim = 0;     // Transformer width; 0 means input_dim (no input projection)
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  bool positional = true;        // add sinusoidal position encodings (Transformer)

  std::size_t transformer_dim() const { return model_dim == 0 ? input_dim : model_dim; }
  std::size_t output_dim() const;
  void validate() const;
};

/// Shared sentence encoder: maps len x input_dim embeddings to
/// len x output_dim states.
///
/// Masked rows are dropped before encoding and come back as zero rows, so
/// they never attend, are never attended to, and never feed a recurrent
/// state. BOW is the identity.
class Encoder {
 public:
  Encoder(const EncoderConfig& config, ad::ParameterStore& store, const std::string& prefix,
          Rng& rng);

  ad::Var encode(ad::Graph& graph, ad::Var x, ad::MaskView mask, const ForwardMode& mode) const;

  const EncoderConfig& config() const { return config_; }
  std::size_t output_dim() const { return config_.output_dim(); }

 private:
  ad::Var encode_dense(ad::Graph& graph, ad::Var x, std::span<const std::size_t> positions,
                       const ForwardMode& mode) const;

  EncoderConfig config_;
  std::optional<BiLstm> lstm_;
  std::optional<ad::ParamId> input_projection_;
  std::vector<TransformerBlock> blocks_;
};

// Coordinate-wise max over the unmasked rows (masked rows act as -inf).
inline ad::Var pool_max(ad::Var h, ad::MaskView mask) { return ad::max_pool_rows(h, mask); }

}  // namespace spd
