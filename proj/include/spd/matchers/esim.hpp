#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "spd/autodiff/graph.hpp"
#include "spd/autodiff/ops.hpp"
#include "spd/encoders/encoder.hpp"
#include "spd/encoders/lstm.hpp"

namespace spd {

/// Cross-attention alignment between encoded context (l_c x d) and persona
/// (l_p x d). Energies e_ij = c_i . p_j; each side is soft-aligned against
/// the other with a masked softmax and enhanced to [a; a~; a - a~; a * a~],
/// giving l_c x 4d and l_p x 4d. Masked rows come back zero.
std::pair<ad::Var, ad::Var> esim_align(ad::Var context, ad::Var persona, ad::MaskView context_mask,
                                       ad::MaskView persona_mask);

/// Sentence-level aggregation: ReLU projection (4d -> projection), a
/// composition BiLSTM (projection -> 2H), then [max-pool ; mean-pool] over
/// the valid rows, giving a 1 x 4H vector.
class EsimSentenceAggregator {
 public:
  EsimSentenceAggregator(ad::ParameterStore& store, const std::string& prefix,
                         std::size_t input_dim, std::size_t projection, std::size_t hidden,
                         Rng& rng);

  ad::Var run(ad::Graph& graph, ad::Var matched, ad::MaskView mask, const ForwardMode& mode) const;

  std::size_t output_dim() const { return 2 * composition_.output_dim(); }

 private:
  ad::ParamId w_proj_;
  ad::ParamId b_proj_;
  BiLstm composition_;
};

/// Discourse-level aggregation for the utterance-to-profile ESIM.
/// Utterance vectors (chronological) go through a BiLSTM and are max-pooled;
/// profile vectors are scored by a learned linear map, softmax-normalised,
/// and summed with those weights.
class DiscourseAggregator {
 public:
  DiscourseAggregator(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                      std::size_t hidden, Rng& rng);

  // Rows of `utterances` / `profiles` are sentence vectors; masks mark real ones.
  std::pair<ad::Var, ad::Var> run(ad::Graph& graph, ad::Var utterances, ad::Var profiles,
                                  ad::MaskView utterance_mask, ad::MaskView profile_mask,
                                  const ForwardMode& mode) const;

  // Profile attention weights alone (1 x n_p), for inspection.
  ad::Var profile_weights(ad::Graph& graph, ad::Var profiles, ad::MaskView profile_mask) const;

  std::size_t context_dim() const { return lstm_.output_dim(); }

 private:
  BiLstm lstm_;
  ad::ParamId w_attn_;
};

}  // namespace spd
