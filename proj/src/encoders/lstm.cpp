#include "spd/encoders/lstm.hpp"

#include <cmath>
#include <vector>

#include "spd/autodiff/ops.hpp"

namespace spd {

namespace {

ad::Tensor uniform(Rng& rng, std::size_t rows, std::size_t cols, double bound) {
  ad::Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Lstm::Lstm(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
           std::size_t hidden, Rng& rng)
    : hidden_(hidden) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_x_ = store.add(prefix + "/W_x", uniform(rng, input_dim, 4 * hidden, bound));
  w_h_ = store.add(prefix + "/W_h", uniform(rng, hidden, 4 * hidden, bound));
  bias_ = store.add(prefix + "/b", uniform(rng, 1, 4 * hidden, bound));
}

ad::Var Lstm::run(ad::Graph& graph, ad::Var x, bool reverse) const {
  using namespace ad;
  const std::size_t steps = x.rows();
  const std::size_t h = hidden_;
  Var projected = add_row(matmul(x, graph.param(w_x_)), graph.param(bias_));
  Var w_h = graph.param(w_h_);

  std::vector<Var> states(steps);
  Var hidden_state, cell;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    Var z = slice_rows(projected, t, 1);
    if (k > 0) z = add(z, matmul(hidden_state, w_h));
    Var in_gate = sigmoid(slice_cols(z, 0, h));
    Var cand = tanh(slice_cols(z, 2 * h, h));
    Var out_gate = sigmoid(slice_cols(z, 3 * h, h));
    if (k == 0) {
      cell = mul(in_gate, cand);
    } else {
      Var forget = sigmoid(slice_cols(z, h, h));
      cell = add(mul(forget, cell), mul(in_gate, cand));
    }
    hidden_state = mul(out_gate, tanh(cell));
    states[t] = hidden_state;
  }
  return concat_rows(states);
}

BiLstm::BiLstm(ad::ParameterStore& store, const std::string& prefix, std::size_t input_dim,
               std::size_t hidden, Rng& rng)
    : forward_(store, prefix + "/fwd", input_dim, hidden, rng),
      backward_(store, prefix + "/bwd", input_dim, hidden, rng) {}

ad::Var BiLstm::run(ad::Graph& graph, ad::Var x) const {
  const ad::Var parts[] = {forward_.run(graph, x, false), backward_.run(graph, x, true)};
  return ad::concat_cols(parts);
}

}  // namespace spd
