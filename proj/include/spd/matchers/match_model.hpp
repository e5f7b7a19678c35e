#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spd/autodiff/graph.hpp"
#include "spd/data/padded.hpp"
#include "spd/encoders/embedding.hpp"
#include "spd/encoders/encoder.hpp"
#include "spd/matchers/aggregation.hpp"
#include "spd/matchers/esim.hpp"

namespace spd {

enum class Framing { C2P, U2P };
enum class Family { SentenceEncoding, Esim };

struct ModelConfig {
  Framing framing = Framing::U2P;
  Family family = Family::SentenceEncoding;
  EncoderConfig encoder;  // encoder.input_dim is the word embedding size
  std::size_t vocab_size = 2;
  bool trainable_embeddings = false;
  std::size_t mlp_hidden = 256;
  std::size_t esim_projection = 0;  // 0 means the BiLSTM hidden size
  AggregationStrategy aggregation;
  double dropout = 0.2;
  // A starts as (bilinear_identity / d) I plus uniform(-1/d, 1/d) noise.
  double bilinear_identity = 1.0;

  // "u2p-bilstm", "c2p-esim", ...
  std::string name() const;
  void validate() const;

  // Full-size defaults for a named architecture (300-d embeddings, H = 200).
  static ModelConfig preset(std::string_view name, std::size_t vocab_size = 2);
};

std::vector<std::string> model_names();

/// Two-layer perceptron head: ReLU hidden layer, scalar logit.
class MlpHead {
 public:
  MlpHead(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
          std::size_t hidden, Rng& rng);

  ad::Var logit(ad::Graph& graph, ad::Var features, const ForwardMode& mode) const;

  std::size_t input_dim() const { return input_dim_; }
  ad::ParamId w1() const { return w1_; }
  ad::ParamId b1() const { return b1_; }
  ad::ParamId w2() const { return w2_; }
  ad::ParamId b2() const { return b2_; }

 private:
  std::size_t input_dim_;
  ad::ParamId w1_, b1_, w2_, b2_;
};

/// Matching network g(c, p) for one framing x family combination.
///
/// All parameters live in one ParameterStore; components refer to them by
/// id, so the model is a plain copyable value. A constructed model is
/// read-only during inference and may be scored from several threads.
class MatchModel {
 public:
  MatchModel(const ModelConfig& config, std::uint64_t seed,
             std::optional<ad::Tensor> embeddings = std::nullopt);

  struct Output {
    ad::Var logit;                      // pre-sigmoid score (s for U2P sentence encoding)
    ad::Var probability;                // g(c, p)
    std::optional<ScoreMatrix> scores;  // U2P sentence encoding only
  };

  Output forward(ad::Graph& graph, const PaddedSide& context, const PaddedSide& persona,
                 const ForwardMode& mode) const;

  // Inference-mode logit; consistent with probability ordering.
  double score(const PaddedSide& context, const PaddedSide& persona) const;
  double probability(const PaddedSide& context, const PaddedSide& persona) const;

  // Embed + encode + max-pool one token sequence (1 x d_enc).
  ad::Var sentence_vector(ad::Graph& graph, std::span<const std::int32_t> tokens,
                          const ForwardMode& mode) const;

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }
  const Encoder& encoder() const { return encoder_; }
  std::optional<ad::ParamId> bilinear() const { return bilinear_; }
  const std::optional<MlpHead>& mlp() const { return mlp_; }
  const std::optional<DiscourseAggregator>& discourse() const { return discourse_; }

 private:
  Output forward_sentence_encoding(ad::Graph& graph, const PaddedSide& context,
                                   const PaddedSide& persona, const ForwardMode& mode) const;
  Output forward_esim(ad::Graph& graph, const PaddedSide& context, const PaddedSide& persona,
                      const ForwardMode& mode) const;
  ad::Var encode_tokens(ad::Graph& graph, std::span<const std::int32_t> tokens,
                        const ForwardMode& mode) const;

  ModelConfig config_;
  ad::ParameterStore params_;
  EmbeddingTable embeddings_;
  Encoder encoder_;
  std::optional<ad::ParamId> bilinear_;
  std::optional<EsimSentenceAggregator> esim_aggregator_;
  std::optional<DiscourseAggregator> discourse_;
  std::optional<MlpHead> mlp_;
};

/// a^T A b for row vectors a, b and square A (no sigmoid).
double bilinear_score(const ad::Tensor& a, const ad::Tensor& b, const ad::Tensor& form);
ad::Var bilinear_score(ad::Var a, ad::Var b, ad::Var form);

/// Coarse context-to-persona matching degree g in (0, 1).
double c2p_forward(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona);

struct U2pResult {
  ScoreMatrix scores;
  double total = 0.0;
  double g = 0.5;
};
/// Fine-grained utterance-to-profile matching: the score matrix and g.
U2pResult u2p_forward(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona);

/// g = sigmoid(MLP(features)) for an ESIM model's head.
double mlp_classify(const MatchModel& model, const ad::Tensor& features);

/// Trainable scalar count; frozen embeddings are excluded.
std::size_t count_parameters(const MatchModel& model);

}  // namespace spd
