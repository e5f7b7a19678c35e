#include "spd/matchers/match_model.hpp"

#include <cmath>

#include "spd/errors.hpp"

namespace spd {

namespace {

ad::Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

EmbeddingTable make_embeddings(ad::ParameterStore& store, const ModelConfig& config,
                               std::uint64_t seed, std::optional<ad::Tensor>& pretrained) {
  if (pretrained) {
    require(pretrained->rows() == config.vocab_size && pretrained->cols() == config.encoder.input_dim,
            "pretrained embedding table does not match vocab size x embedding dim");
    return EmbeddingTable(store, "embedding", std::move(*pretrained), config.trainable_embeddings);
  }
  Rng rng(mix_seed(seed, 1));
  return EmbeddingTable(store, "embedding", config.vocab_size, config.encoder.input_dim,
                        config.trainable_embeddings, rng);
}

Encoder make_encoder(ad::ParameterStore& store, const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(mix_seed(seed, 2));
  return Encoder(config.encoder, store, "encoder", rng);
}

std::vector<std::size_t> valid_indices(const ad::Mask& mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) out.push_back(i);
  }
  return out;
}

}  // namespace

std::string ModelConfig::name() const {
  std::string out = framing == Framing::C2P ? "c2p-" : "u2p-";
  if (family == Family::Esim) return out + "esim";
  return out + std::string(to_string(encoder.kind));
}

void ModelConfig::validate() const {
  encoder.validate();
  require(vocab_size > 2, "vocabulary must hold PAD, UNK and at least one token");
  require(dropout >= 0.0 && dropout < 1.0, "dropout rate must lie in [0, 1)");
  require(bilinear_identity >= 0.0, "bilinear_identity must be non-negative");
  if (family == Family::Esim) {
    require(encoder.kind == EncoderKind::BiLstm, "ESIM models use a BiLSTM encoder");
    require(mlp_hidden > 0, "MLP hidden size must be positive");
  }
}

ModelConfig ModelConfig::preset(std::string_view name, std::size_t vocab_size) {
  ModelConfig config;
  config.vocab_size = vocab_size;
  const auto dash = name.find('-');
  require(dash != std::string_view::npos, "model name must look like u2p-bow");
  const auto framing = name.substr(0, dash);
  const auto kind = name.substr(dash + 1);
  if (framing == "c2p") {
    config.framing = Framing::C2P;
  } else if (framing == "u2p") {
    config.framing = Framing::U2P;
  } else {
    throw ContractViolation("unknown framing in model name: " + std::string(name));
  }
  if (kind == "esim") {
    config.family = Family::Esim;
    config.encoder.kind = EncoderKind::BiLstm;
  } else {
    config.family = Family::SentenceEncoding;
    config.encoder.kind = parse_encoder_kind(kind);
  }
  return config;
}

std::vector<std::string> model_names() {
  return {"c2p-bow", "u2p-bow", "c2p-bilstm", "u2p-bilstm", "c2p-transformer",
          "u2p-transformer", "c2p-esim", "u2p-esim"};
}

MlpHead::MlpHead(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden, Rng& rng)
    : input_dim_(input_dim),
      w1_(store.add(prefix + "/W_1", xavier(rng, input_dim, hidden))),
      b1_(store.add(prefix + "/b_1", ad::Tensor({1, hidden}))),
      w2_(store.add(prefix + "/W_2", xavier(rng, hidden, 1))),
      b2_(store.add(prefix + "/b_2", ad::Tensor({1, 1}))) {}

ad::Var MlpHead::logit(ad::Graph& graph, ad::Var features, const ForwardMode& mode) const {
  require(features.rows() == 1 && features.cols() == input_dim_,
          "mlp: feature dim " + std::to_string(features.cols()) + " does not match " +
              std::to_string(input_dim_));
  ad::Var hidden =
      ad::relu(ad::add_row(ad::matmul(features, graph.param(w1_)), graph.param(b1_)));
  hidden = apply_dropout(hidden, mode);
  return ad::add_row(ad::matmul(hidden, graph.param(w2_)), graph.param(b2_));
}

MatchModel::MatchModel(const ModelConfig& config, std::uint64_t seed,
                       std::optional<ad::Tensor> embeddings)
    : config_(config),
      embeddings_(make_embeddings(params_, config_, seed, embeddings)),
      encoder_(make_encoder(params_, config_, seed)) {
  Rng rng(mix_seed(seed, 3));
  const std::size_t d = encoder_.output_dim();
  if (config_.family == Family::SentenceEncoding) {
    // (bilinear_identity / d) I + uniform(-1/d, 1/d)
    const double bound = 1.0 / static_cast<double>(d);
    ad::Tensor form({d, d});
    for (std::size_t i = 0; i < form.numel(); ++i) form[i] = rng.uniform(-bound, bound);
    for (std::size_t i = 0; i < d; ++i) form(i, i) += config_.bilinear_identity * bound;
    bilinear_ = params_.add("bilinear/A", std::move(form));
    return;
  }
  const std::size_t h = config_.encoder.hidden;
  const std::size_t projection = config_.esim_projection == 0 ? h : config_.esim_projection;
  esim_aggregator_.emplace(params_, "esim/sentence", 4 * d, projection, h, rng);
  const std::size_t sentence_dim = esim_aggregator_->output_dim();
  std::size_t features = 2 * sentence_dim;
  if (config_.framing == Framing::U2P) {
    discourse_.emplace(params_, "esim/discourse", sentence_dim, h, rng);
    features = discourse_->context_dim() + sentence_dim;
  }
  mlp_.emplace(params_, "mlp", features, config_.mlp_hidden, rng);
}

ad::Var MatchModel::encode_tokens(ad::Graph& graph, std::span<const std::int32_t> tokens,
                                  const ForwardMode& mode) const {
  require(!tokens.empty(), "cannot encode an empty token sequence");
  ad::Var emb = apply_dropout(embeddings_.lookup(graph, tokens), mode);
  return encoder_.encode(graph, emb, {}, mode);
}

ad::Var MatchModel::sentence_vector(ad::Graph& graph, std::span<const std::int32_t> tokens,
                                    const ForwardMode& mode) const {
  return pool_max(encode_tokens(graph, tokens, mode), {});
}

MatchModel::Output MatchModel::forward(ad::Graph& graph, const PaddedSide& context,
                                       const PaddedSide& persona, const ForwardMode& mode) const {
  require(graph.params() == &params_, "graph is bound to a different parameter store");
  require(context.valid_sentences() > 0, "context has no utterances");
  require(persona.valid_sentences() > 0, "persona has no profiles");
  return config_.family == Family::SentenceEncoding
             ? forward_sentence_encoding(graph, context, persona, mode)
             : forward_esim(graph, context, persona, mode);
}

MatchModel::Output MatchModel::forward_sentence_encoding(ad::Graph& graph,
                                                         const PaddedSide& context,
                                                         const PaddedSide& persona,
                                                         const ForwardMode& mode) const {
  ad::Var form = graph.param(*bilinear_);
  Output out;
  if (config_.framing == Framing::C2P) {
    const auto c_tokens = context.concatenated();
    const auto p_tokens = persona.concatenated();
    out.logit = bilinear_score(sentence_vector(graph, c_tokens, mode),
                               sentence_vector(graph, p_tokens, mode), form);
  } else {
    std::vector<ad::Var> utterances, profiles;
    for (std::size_t m : valid_indices(context.sentence_mask)) {
      utterances.push_back(sentence_vector(graph, context.tokens(m), mode));
    }
    for (std::size_t n : valid_indices(persona.sentence_mask)) {
      profiles.push_back(sentence_vector(graph, persona.tokens(n), mode));
    }
    ad::Var u = ad::concat_rows(utterances);
    ad::Var p = ad::concat_rows(profiles);
    ad::Var s = ad::matmul(ad::matmul(u, form), p, /*transpose_b=*/true);
    out.logit = aggregate_scores(s, {}, {}, config_.aggregation);
    const auto& sv = s.value();
    out.scores = ScoreMatrix::dense(sv.rows(), sv.cols(), sv.storage());
  }
  out.probability = ad::sigmoid(out.logit);
  return out;
}

MatchModel::Output MatchModel::forward_esim(ad::Graph& graph, const PaddedSide& context,
                                            const PaddedSide& persona,
                                            const ForwardMode& mode) const {
  Output out;
  ad::Var features;
  if (config_.framing == Framing::C2P) {
    ad::Var c = encode_tokens(graph, context.concatenated(), mode);
    ad::Var p = encode_tokens(graph, persona.concatenated(), mode);
    auto [c_mat, p_mat] = esim_align(c, p, {}, {});
    const ad::Var parts[] = {esim_aggregator_->run(graph, c_mat, {}, mode),
                             esim_aggregator_->run(graph, p_mat, {}, mode)};
    features = ad::concat_cols(parts);
  } else {
    // Each sentence is encoded alone, then the pieces are joined for alignment.
    auto encode_side = [&](const PaddedSide& side, std::vector<std::size_t>& lengths) {
      std::vector<ad::Var> encoded;
      for (std::size_t s : valid_indices(side.sentence_mask)) {
        const auto tokens = side.tokens(s);
        lengths.push_back(tokens.size());
        encoded.push_back(encode_tokens(graph, tokens, mode));
      }
      return ad::concat_rows(encoded);
    };
    std::vector<std::size_t> c_lengths, p_lengths;
    ad::Var c = encode_side(context, c_lengths);
    ad::Var p = encode_side(persona, p_lengths);
    auto [c_mat, p_mat] = esim_align(c, p, {}, {});
    auto aggregate_pieces = [&](ad::Var matched, const std::vector<std::size_t>& lengths) {
      std::vector<ad::Var> vectors;
      std::size_t offset = 0;
      for (std::size_t len : lengths) {
        vectors.push_back(esim_aggregator_->run(graph, ad::slice_rows(matched, offset, len), {}, mode));
        offset += len;
      }
      return ad::concat_rows(vectors);
    };
    auto [c_agr, p_agr] = discourse_->run(graph, aggregate_pieces(c_mat, c_lengths),
                                          aggregate_pieces(p_mat, p_lengths), {}, {}, mode);
    const ad::Var parts[] = {c_agr, p_agr};
    features = ad::concat_cols(parts);
  }
  out.logit = mlp_->logit(graph, features, mode);
  out.probability = ad::sigmoid(out.logit);
  return out;
}

double MatchModel::score(const PaddedSide& context, const PaddedSide& persona) const {
  ad::Graph graph(&params_, /*record=*/false);
  return forward(graph, context, persona, {}).logit.value().item();
}

double MatchModel::probability(const PaddedSide& context, const PaddedSide& persona) const {
  ad::Graph graph(&params_, /*record=*/false);
  return forward(graph, context, persona, {}).probability.value().item();
}

double bilinear_score(const ad::Tensor& a, const ad::Tensor& b, const ad::Tensor& form) {
  require(form.rank() == 2 && form.rows() == form.cols(), "bilinear form must be square");
  require(a.numel() == form.rows() && b.numel() == form.cols(), "bilinear_score: dim mismatch");
  const std::size_t d = form.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += form(i, j) * b[j];
    total += a[i] * row;
  }
  return total;
}

ad::Var bilinear_score(ad::Var a, ad::Var b, ad::Var form) {
  require(form.rows() == form.cols(), "bilinear form must be square");
  require(a.rows() == 1 && b.rows() == 1 && a.cols() == form.rows() && b.cols() == form.cols(),
          "bilinear_score: dim mismatch");
  return ad::matmul(ad::matmul(a, form), b, /*transpose_b=*/true);
}

double c2p_forward(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona) {
  const auto& c = model.config();
  require(c.framing == Framing::C2P && c.family == Family::SentenceEncoding,
          "c2p_forward needs a C2P sentence-encoding model");
  return model.probability(context, persona);
}

U2pResult u2p_forward(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona) {
  const auto& c = model.config();
  require(c.framing == Framing::U2P && c.family == Family::SentenceEncoding,
          "u2p_forward needs a U2P sentence-encoding model");
  ad::Graph graph(&model.params(), /*record=*/false);
  auto out = model.forward(graph, context, persona, {});
  return {std::move(*out.scores), out.logit.value().item(), out.probability.value().item()};
}

double mlp_classify(const MatchModel& model, const ad::Tensor& features) {
  require(model.mlp().has_value(), "model has no MLP head");
  ad::Graph graph(&model.params(), /*record=*/false);
  ad::Var f = graph.constant(ad::Tensor::row(features.storage()));
  return ad::sigmoid(model.mlp()->logit(graph, f, {})).value().item();
}

std::size_t count_parameters(const MatchModel& model) {
  return model.params().trainable_scalar_count();
}

}  // namespace spd
