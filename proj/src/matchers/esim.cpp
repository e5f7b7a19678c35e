#include "spd/matchers/esim.hpp"

#include <cmath>
#include <vector>

#include "spd/errors.hpp"

namespace spd {

namespace {

ad::Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

std::vector<std::size_t> valid_rows(ad::MaskView mask, std::size_t rows) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows; ++i) {
    if (mask.empty() || mask[i] != 0) out.push_back(i);
  }
  return out;
}

ad::Var enhance(ad::Var a, ad::Var aligned) {
  const ad::Var parts[] = {a, aligned, ad::sub(a, aligned), ad::mul(a, aligned)};
  return ad::concat_cols(parts);
}

// Zeroes masked rows by compacting and scattering back.
ad::Var zero_masked_rows(ad::Var x, ad::MaskView mask) {
  const auto keep = valid_rows(mask, x.rows());
  if (keep.size() == x.rows()) return x;
  return ad::scatter_rows(ad::gather_rows(x, keep), keep, x.rows());
}

}  // namespace

std::pair<ad::Var, ad::Var> esim_align(ad::Var context, ad::Var persona, ad::MaskView context_mask,
                                       ad::MaskView persona_mask) {
  require(context.cols() == persona.cols(), "esim_align: encoded dims differ");
  require(!valid_rows(context_mask, context.rows()).empty(), "esim_align: context fully masked");
  require(!valid_rows(persona_mask, persona.rows()).empty(), "esim_align: persona fully masked");

  ad::Var energy = ad::matmul(context, persona, /*transpose_b=*/true);  // l_c x l_p
  ad::Var c_weights = ad::masked_softmax_rows(energy, context_mask, persona_mask);
  ad::Var p_weights = ad::masked_softmax_rows(ad::transpose(energy), persona_mask, context_mask);
  ad::Var c_aligned = ad::matmul(c_weights, persona);
  ad::Var p_aligned = ad::matmul(p_weights, context);
  ad::Var c_mat = zero_masked_rows(enhance(context, c_aligned), context_mask);
  ad::Var p_mat = zero_masked_rows(enhance(persona, p_aligned), persona_mask);
  return {c_mat, p_mat};
}

EsimSentenceAggregator::EsimSentenceAggregator(ad::ParameterStore& store,
                                               const std::string& prefix, std::size_t input_dim,
                                               std::size_t projection, std::size_t hidden,
                                               Rng& rng)
    : w_proj_(store.add(prefix + "/proj/W", xavier(rng, input_dim, projection))),
      b_proj_(store.add(prefix + "/proj/b", ad::Tensor({1, projection}))),
      composition_(store, prefix + "/composition", projection, hidden, rng) {}

ad::Var EsimSentenceAggregator::run(ad::Graph& graph, ad::Var matched, ad::MaskView mask,
                                    const ForwardMode& mode) const {
  const auto keep = valid_rows(mask, matched.rows());
  require(!keep.empty(), "esim sentence aggregation: every position is masked");
  ad::Var x = keep.size() == matched.rows() ? matched : ad::gather_rows(matched, keep);
  ad::Var projected =
      ad::relu(ad::add_row(ad::matmul(x, graph.param(w_proj_)), graph.param(b_proj_)));
  projected = apply_dropout(projected, mode);
  ad::Var composed = apply_dropout(composition_.run(graph, projected), mode);
  const ad::Var pooled[] = {ad::max_pool_rows(composed), ad::mean_pool_rows(composed)};
  return ad::concat_cols(pooled);
}

DiscourseAggregator::DiscourseAggregator(ad::ParameterStore& store, const std::string& prefix,
                                         std::size_t input_dim, std::size_t hidden, Rng& rng)
    : lstm_(store, prefix + "/bilstm", input_dim, hidden, rng),
      w_attn_(store.add(prefix + "/profile_attention/w", xavier(rng, input_dim, 1))) {}

ad::Var DiscourseAggregator::profile_weights(ad::Graph& graph, ad::Var profiles,
                                             ad::MaskView profile_mask) const {
  ad::Var logits = ad::transpose(ad::matmul(profiles, graph.param(w_attn_)));  // 1 x n_p
  return ad::masked_softmax_rows(logits, {}, profile_mask);
}

std::pair<ad::Var, ad::Var> DiscourseAggregator::run(ad::Graph& graph, ad::Var utterances,
                                                     ad::Var profiles, ad::MaskView utterance_mask,
                                                     ad::MaskView profile_mask,
                                                     const ForwardMode& mode) const {
  const auto keep = valid_rows(utterance_mask, utterances.rows());
  require(!keep.empty(), "discourse aggregation: no valid utterance");
  require(!valid_rows(profile_mask, profiles.rows()).empty(), "discourse aggregation: no valid profile");
  ad::Var chronological =
      keep.size() == utterances.rows() ? utterances : ad::gather_rows(utterances, keep);
  ad::Var context = ad::max_pool_rows(apply_dropout(lstm_.run(graph, chronological), mode));
  ad::Var persona = ad::matmul(profile_weights(graph, profiles, profile_mask), profiles);
  return {context, persona};
}

}  // namespace spd
