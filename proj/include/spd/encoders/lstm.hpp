#pragma once

#include <cstddef>
#include <string>

#include "spd/autodiff/graph.hpp"
#include "spd/rng.hpp"

namespace spd {

/// Single-direction LSTM with gate order (input, forget, cell, output).
/// Parameters: W_x (in x 4H), W_h (H x 4H), b (1 x 4H).
class Lstm {
 public:
  Lstm(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
       std::size_t hidden, Rng& rng);

  // x is T x input_dim; returns T x H hidden states. With reverse, the
  // sequence is consumed last-to-first and row t still holds position t.
  ad::Var run(ad::Graph& graph, ad::Var x, bool reverse) const;

  std::size_t hidden() const { return hidden_; }

 private:
  ad::ParamId w_x_;
  ad::ParamId w_h_;
  ad::ParamId bias_;
  std::size_t hidden_;
};

/// Forward and backward Lstm whose states are concatenated per position (T x 2H).
class BiLstm {
 public:
  BiLstm(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
         std::size_t hidden, Rng& rng);

  ad::Var run(ad::Graph& graph, ad::Var x) const;

  std::size_t output_dim() const { return 2 * forward_.hidden(); }

 private:
  Lstm forward_;
  Lstm backward_;
};

}  // namespace spd
