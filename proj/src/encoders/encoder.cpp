#include "spd/encoders/encoder.hpp"

#include <cmath>

#include "spd/errors.hpp"

namespace spd {

ad::Var apply_dropout(ad::Var x, const ForwardMode& mode) {
  if (!mode.training || mode.dropout == 0.0) return x;
  require(mode.rng != nullptr, "training-mode dropout needs an rng");
  return ad::dropout(x, mode.dropout, *mode.rng, true);
}

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Bow: return "bow";
    case EncoderKind::BiLstm: return "bilstm";
    case EncoderKind::Transformer: return "transformer";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "bow") return EncoderKind::Bow;
  if (name == "bilstm") return EncoderKind::BiLstm;
  if (name == "transformer") return EncoderKind::Transformer;
  throw ContractViolation("unknown encoder kind: " + std::string(name));
}

std::size_t EncoderConfig::output_dim() const {
  switch (kind) {
    case EncoderKind::Bow: return input_dim;
    case EncoderKind::BiLstm: return 2 * hidden;
    case EncoderKind::Transformer: return transformer_dim();
  }
  return 0;
}

void EncoderConfig::validate() const {
  require(input_dim > 0, "encoder input dim must be positive");
  if (kind == EncoderKind::BiLstm) require(hidden > 0, "BiLSTM hidden size must be positive");
  if (kind == EncoderKind::Transformer) {
    require(layers > 0 && ff_dim > 0, "transformer layers and ff dim must be positive");
    require(heads > 0 && transformer_dim() % heads == 0,
            "transformer model dim must be divisible by head count");
  }
}

Encoder::Encoder(const EncoderConfig& config, ad::ParameterStore& store, const std::string& prefix,
                 Rng& rng)
    : config_(config) {
  config_.validate();
  if (config_.kind == EncoderKind::BiLstm) {
    lstm_.emplace(store, prefix + "/bilstm", config_.input_dim, config_.hidden, rng);
  } else if (config_.kind == EncoderKind::Transformer) {
    const std::size_t d = config_.transformer_dim();
    if (d != config_.input_dim) {
      const double bound = std::sqrt(6.0 / static_cast<double>(d + config_.input_dim));
      ad::Tensor w({config_.input_dim, d});
      for (std::size_t i = 0; i < w.numel(); ++i) w[i] = rng.uniform(-bound, bound);
      input_projection_ = store.add(prefix + "/input_projection", std::move(w));
    }
    for (std::size_t l = 0; l < config_.layers; ++l) {
      blocks_.emplace_back(store, prefix + "/block" + std::to_string(l), d, config_.heads,
                           config_.ff_dim, rng);
    }
  }
}

ad::Var Encoder::encode(ad::Graph& graph, ad::Var x, ad::MaskView mask,
                        const ForwardMode& mode) const {
  require(mask.empty() || mask.size() == x.rows(), "encode: mask length must equal sequence length");
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (mask.empty() || mask[i] != 0) positions.push_back(i);
  }
  require(!positions.empty(), "encode: every position is masked");
  if (config_.kind == EncoderKind::Bow) return x;
  if (positions.size() == x.rows()) return encode_dense(graph, x, positions, mode);
  ad::Var dense = encode_dense(graph, ad::gather_rows(x, positions), positions, mode);
  return ad::scatter_rows(dense, positions, x.rows());
}

ad::Var Encoder::encode_dense(ad::Graph& graph, ad::Var x, std::span<const std::size_t> positions,
                              const ForwardMode& mode) const {
  if (config_.kind == EncoderKind::BiLstm) return apply_dropout(lstm_->run(graph, x), mode);

  ad::Var h = x;
  if (input_projection_) h = ad::matmul(h, graph.param(*input_projection_));
  if (config_.positional) {
    h = ad::add(h, graph.constant(sinusoidal_positions(positions, config_.transformer_dim())));
  }
  for (const auto& block : blocks_) h = block.run(graph, h, mode);
  return h;
}

}  // namespace spd
