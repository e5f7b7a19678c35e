#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spd/autodiff/graph.hpp"
#include "spd/rng.hpp"

namespace spd::ad {

// One flag per row (or column); non-zero marks real content. An empty mask
// means "everything valid".
using Mask = std::vector<std::uint8_t>;
using MaskView = std::span<const std::uint8_t>;

// Elementwise, same shape.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

// a (r x c) + b (1 x c) broadcast over rows.
Var add_row(Var a, Var b);

// a (r x k) * b (k x c); with transpose_b, b is (c x k).
Var matmul(Var a, Var b, bool transpose_b = false);
Var transpose(Var a);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

// Sum / mean of all elements, as a 1 x 1 scalar.
Var sum(Var a);
Var mean(Var a);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t start, std::size_t count);
Var slice_cols(Var a, std::size_t start, std::size_t count);

// Selects rows `index` of a, in order.
Var gather_rows(Var a, std::span<const std::size_t> index);
// Inverse layout of gather_rows: row i of a lands at row index[i] of a
// `total`-row zero matrix.
Var scatter_rows(Var a, std::span<const std::size_t> index, std::size_t total);

// Rows of a frozen or trainable table; the PAD row (id 0) never receives gradient.
Var embedding_lookup(Var table, std::span<const std::int32_t> ids);

// Column-wise max / mean over the valid rows; result is 1 x c. At least one
// row must be valid.
Var max_pool_rows(Var a, MaskView row_mask = {});
Var mean_pool_rows(Var a, MaskView row_mask = {});

// Softmax of every valid row over its valid columns. Masked columns get
// weight exactly 0; masked rows are all zero.
Var masked_softmax_rows(Var a, MaskView row_mask, MaskView col_mask);

// Per-row normalisation followed by gamma (1 x c) scale and beta (1 x c) shift.
Var layer_norm_rows(Var a, Var gamma, Var beta, double eps = 1e-5);

// Inverted dropout; identity when !training or rate == 0.
Var dropout(Var a, double rate, Rng& rng, bool training);

// Binary cross-entropy of a probability g (1 x 1) against label y, with g
// clamped to [1e-7, 1 - 1e-7].
Var bce(Var g, int label);

inline constexpr double kProbabilityClamp = 1e-7;

// Same loss computed from the logit s with g = sigmoid(s); never saturates,
// the gradient is sigmoid(s) - y.
Var bce_logit(Var s, int label);

}  // namespace spd::ad
