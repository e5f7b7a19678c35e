#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "spd/autodiff/graph.hpp"
#include "spd/rng.hpp"

namespace spd {

struct ForwardMode;

/// Post-norm encoder block: multi-head self-attention and a ReLU
/// feed-forward layer, each wrapped in residual + layer normalisation.
class TransformerBlock {
 public:
  TransformerBlock(ad::ParameterStore& store, const std::string& prefix, std::size_t model_dim,
                   std::size_t heads, std::size_t ff_dim, Rng& rng);

  // x holds only real (unmasked) positions, so every row attends to every row.
  ad::Var run(ad::Graph& graph, ad::Var x, const ForwardMode& mode) const;

 private:
  std::size_t model_dim_;
  std::size_t heads_;
  ad::ParamId w_q_, b_q_, w_k_, b_k_, w_v_, b_v_, w_o_, b_o_;
  ad::ParamId ln1_gamma_, ln1_beta_;
  ad::ParamId w_ff1_, b_ff1_, w_ff2_, b_ff2_;
  ad::ParamId ln2_gamma_, ln2_beta_;
};

// Sinusoidal encodings for the given absolute positions (rows) and dim (cols).
ad::Tensor sinusoidal_positions(std::span<const std::size_t> positions, std::size_t dim);

}  // namespace spd
