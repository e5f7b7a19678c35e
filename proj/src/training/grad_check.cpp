#include "spd/training/grad_check.hpp"

#include <algorithm>

#include "spd/autodiff/ops.hpp"
#include "spd/autodiff/optim.hpp"
#include "spd/data/padded.hpp"
#include "spd/rng.hpp"

namespace spd {

namespace {

PaddedSide random_side(Rng& rng, std::size_t sentences, std::size_t vocab, std::size_t max_sentences) {
  std::vector<std::vector<std::int32_t>> ids(sentences);
  for (auto& s : ids) {
    const std::size_t len = 1 + rng.below(4);
    for (std::size_t t = 0; t < len; ++t) s.push_back(static_cast<std::int32_t>(2 + rng.below(vocab - 2)));
  }
  return pad_side(ids, max_sentences, 6);
}

}  // namespace

ModelConfig toy_model_config(std::string_view name, std::size_t vocab_size) {
  ModelConfig c = ModelConfig::preset(name, vocab_size);
  c.encoder.input_dim = 8;
  c.encoder.hidden = 3;
  c.encoder.heads = 2;
  c.encoder.ff_dim = 6;
  c.mlp_hidden = 5;
  c.dropout = 0.0;
  return c;
}

double model_gradient_check(std::string_view name, std::uint64_t seed, double eps) {
  const ModelConfig config = toy_model_config(name);
  MatchModel model(config, seed);
  Rng rng(mix_seed(seed, 0x9c));
  PaddedSide context, persona;
  // Redraw until some U2P score is positive; a fully clamped matrix has a zero gradient.
  for (int draw = 0; draw < 100; ++draw) {
    if (model.bilinear()) {
      ad::Tensor& form = model.params().value(*model.bilinear());
      for (std::size_t i = 0; i < form.numel(); ++i) form[i] = rng.uniform(-1.0, 1.0);
    }
    context = random_side(rng, 2, config.vocab_size, 4);
    persona = random_side(rng, 2, config.vocab_size, 5);
    if (config.framing != Framing::U2P || config.family != Family::SentenceEncoding) break;
    const ScoreMatrix scores = u2p_forward(model, context, persona).scores;
    if (*std::max_element(scores.values.begin(), scores.values.end()) > 0.0) break;
  }
  return ad::finite_difference_check(
      model.params(),
      [&](ad::Graph& g) { return ad::bce(model.forward(g, context, persona, {}).probability, 1); }, eps);
}

}  // namespace spd
