#include "spd/encoders/transformer.hpp"

#include <cmath>
#include <vector>

#include "spd/autodiff/ops.hpp"
#include "spd/encoders/encoder.hpp"
#include "spd/errors.hpp"

namespace spd {

namespace {

ad::Tensor xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  ad::Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

ad::Tensor zeros_row(std::size_t n) { return ad::Tensor({1, n}); }
ad::Tensor ones_row(std::size_t n) { return ad::Tensor({1, n}, 1.0); }

}  // namespace

TransformerBlock::TransformerBlock(ad::ParameterStore& store, const std::string& prefix,
                                   std::size_t model_dim, std::size_t heads, std::size_t ff_dim,
                                   Rng& rng)
    : model_dim_(model_dim), heads_(heads) {
  require(heads > 0 && model_dim % heads == 0, "transformer model dim must be divisible by heads");
  const std::size_t d = model_dim;
  w_q_ = store.add(prefix + "/attn/W_q", xavier(rng, d, d));
  b_q_ = store.add(prefix + "/attn/b_q", zeros_row(d));
  w_k_ = store.add(prefix + "/attn/W_k", xavier(rng, d, d));
  b_k_ = store.add(prefix + "/attn/b_k", zeros_row(d));
  w_v_ = store.add(prefix + "/attn/W_v", xavier(rng, d, d));
  b_v_ = store.add(prefix + "/attn/b_v", zeros_row(d));
  w_o_ = store.add(prefix + "/attn/W_o", xavier(rng, d, d));
  b_o_ = store.add(prefix + "/attn/b_o", zeros_row(d));
  ln1_gamma_ = store.add(prefix + "/ln1/gamma", ones_row(d));
  ln1_beta_ = store.add(prefix + "/ln1/beta", zeros_row(d));
  w_ff1_ = store.add(prefix + "/ff/W_1", xavier(rng, d, ff_dim));
  b_ff1_ = store.add(prefix + "/ff/b_1", zeros_row(ff_dim));
  w_ff2_ = store.add(prefix + "/ff/W_2", xavier(rng, ff_dim, d));
  b_ff2_ = store.add(prefix + "/ff/b_2", zeros_row(d));
  ln2_gamma_ = store.add(prefix + "/ln2/gamma", ones_row(d));
  ln2_beta_ = store.add(prefix + "/ln2/beta", zeros_row(d));
}

ad::Var TransformerBlock::run(ad::Graph& graph, ad::Var x, const ForwardMode& mode) const {
  using namespace ad;
  auto linear = [&](Var in, ParamId w, ParamId b) {
    return add_row(matmul(in, graph.param(w)), graph.param(b));
  };
  const std::size_t head_dim = model_dim_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var q = linear(x, w_q_, b_q_);
  Var k = linear(x, w_k_, b_k_);
  Var v = linear(x, w_v_, b_v_);
  std::vector<Var> head_out;
  for (std::size_t h = 0; h < heads_; ++h) {
    Var qh = slice_cols(q, h * head_dim, head_dim);
    Var kh = slice_cols(k, h * head_dim, head_dim);
    Var vh = slice_cols(v, h * head_dim, head_dim);
    Var weights = masked_softmax_rows(scale(matmul(qh, kh, true), inv_sqrt), {}, {});
    head_out.push_back(matmul(weights, vh));
  }
  Var attended = linear(concat_cols(head_out), w_o_, b_o_);
  attended = apply_dropout(attended, mode);
  Var x1 = layer_norm_rows(add(x, attended), graph.param(ln1_gamma_), graph.param(ln1_beta_));

  Var ff = linear(relu(linear(x1, w_ff1_, b_ff1_)), w_ff2_, b_ff2_);
  ff = apply_dropout(ff, mode);
  return layer_norm_rows(add(x1, ff), graph.param(ln2_gamma_), graph.param(ln2_beta_));
}

ad::Tensor sinusoidal_positions(std::span<const std::size_t> positions, std::size_t dim) {
  ad::Tensor pe({positions.size(), dim});
  for (std::size_t r = 0; r < positions.size(); ++r) {
    const double pos = static_cast<double>(positions[r]);
    for (std::size_t c = 0; c < dim; ++c) {
      const double rate =
          std::pow(10000.0, static_cast<double>(2 * (c / 2)) / static_cast<double>(dim));
      pe(r, c) = (c % 2 == 0) ? std::sin(pos / rate) : std::cos(pos / rate);
    }
  }
  return pe;
}

}  // namespace spd
