#include <cmath>
#include <functional>

#include "doctest.h"
#include "spd/autodiff/graph.hpp"
#include "spd/autodiff/ops.hpp"
#include "spd/autodiff/optim.hpp"
#include "spd/errors.hpp"
#include "test_util.hpp"

using namespace spd;
using namespace spd::ad;
using spd::testing::random_matrix;

TEST_CASE("sigmoid derivative at zero is one quarter") {
  ParameterStore store;
  const ParamId x = store.add("x", Tensor::scalar(0.0));
  Graph g(&store);
  const GradMap grads = grad(g, sigmoid(g.param(x)));
  CHECK(grads.at(x).item() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("gradient of sum of squares is twice the input") {
  ParameterStore store;
  const ParamId x = store.add("x", Tensor::row({1.0, 2.0}));
  Graph g(&store);
  Var v = g.param(x);
  const GradMap grads = grad(g, sum(mul(v, v)));
  CHECK(grads.at(x)[0] == 2.0);
  CHECK(grads.at(x)[1] == 4.0);
}

TEST_CASE("bilinear form gradient is the outer product") {
  ParameterStore store;
  const ParamId a = store.add("A", Tensor::matrix(2, 2, {0.3, -0.1, 0.7, 0.2}));
  Graph g(&store);
  Var c = g.constant(Tensor::row({1.0, 0.0}));
  Var p = g.constant(Tensor::row({0.0, 1.0}));
  Var s = matmul(matmul(c, g.param(a)), p, /*transpose_b=*/true);
  const GradMap grads = grad(g, s);
  CHECK(grads.at(a) == Tensor::matrix(2, 2, {0.0, 1.0, 0.0, 0.0}));
}

TEST_CASE("grad rejects a non-scalar loss") {
  ParameterStore store;
  const ParamId x = store.add("x", Tensor::row({1.0, 2.0}));
  Graph g(&store);
  CHECK_THROWS_AS(grad(g, g.param(x)), ContractViolation);
}

TEST_CASE("unused parameters receive zero gradients") {
  ParameterStore store;
  const ParamId used = store.add("used", Tensor::scalar(1.5));
  const ParamId unused = store.add("unused", Tensor::matrix(2, 3, std::vector<double>(6, 4.0)));
  Graph g(&store);
  const GradMap grads = grad(g, scale(g.param(used), 3.0));
  CHECK(grads.at(used).item() == 3.0);
  CHECK(grads.at(unused) == Tensor({2, 3}, 0.0));
}

TEST_CASE("non-finite values are reported with the op name") {
  ParameterStore store;
  const ParamId x = store.add("x", Tensor::row({1e200, 1.0}));
  Graph g(&store);
  Var v = g.param(x);
  try {
    (void)mul(v, v);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("'mul'") != std::string::npos);
  }
}

TEST_CASE("backward leaves forward values unchanged") {
  Rng rng(3);
  ParameterStore store;
  const ParamId w = store.add("w", random_matrix(rng, 3, 4));
  Graph g(&store);
  Var x = g.constant(random_matrix(rng, 2, 3));
  Var h = tanh(matmul(x, g.param(w)));
  Var loss = sum(mul(h, h));
  std::vector<Tensor> before;
  for (std::size_t i = 0; i < g.size(); ++i) before.push_back(g.value(i));
  grad(g, loss);
  grad(g, loss);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.value(i) == before[i]);
}

TEST_CASE("finite difference oracle") {
  SUBCASE("sigmoid at zero") {
    ParameterStore store;
    store.add("x", Tensor::scalar(0.0));
    const double err = finite_difference_check(
        store, [](Graph& g) { return sigmoid(g.param(0)); }, 1e-4);
    CHECK(err < 1e-6);
  }
  SUBCASE("constant function has zero error") {
    ParameterStore store;
    store.add("x", Tensor::row({0.5, -1.0}));
    const double err = finite_difference_check(
        store, [](Graph& g) { return g.constant(Tensor::scalar(2.0)); }, 1e-4);
    CHECK(err == 0.0);
  }
  SUBCASE("store is restored exactly") {
    Rng rng(11);
    ParameterStore store;
    store.add("x", random_matrix(rng, 3, 3));
    const Tensor before = store.value(0);
    finite_difference_check(
        store, [](Graph& g) { return sum(tanh(g.param(0))); }, 1e-3);
    CHECK(store.value(0) == before);
  }
}

namespace {

// Every differentiable op checked against central differences on random
// double-precision inputs.
struct OpCase {
  const char* name;
  std::function<Var(Graph&, Var, Var)> build;
};

}  // namespace

TEST_CASE("every op passes the finite difference check") {
  const Mask rows_mask{1, 0, 1};
  const Mask cols_mask{1, 1, 0, 1};
  const std::vector<std::size_t> pick{2, 0, 2};
  const std::vector<OpCase> cases{
      {"add", [](Graph&, Var a, Var b) { return sum(mul(add(a, b), a)); }},
      {"sub", [](Graph&, Var a, Var b) { return sum(mul(sub(a, b), b)); }},
      {"scale", [](Graph&, Var a, Var) { return sum(mul(scale(a, -1.7), a)); }},
      {"add_row", [](Graph&, Var a, Var b) { return sum(tanh(add_row(a, slice_rows(b, 0, 1)))); }},
      {"matmul", [](Graph&, Var a, Var b) { return sum(tanh(matmul(a, transpose(b)))); }},
      {"matmul_t", [](Graph&, Var a, Var b) { return sum(sigmoid(matmul(a, b, true))); }},
      {"relu", [](Graph&, Var a, Var b) { return sum(mul(relu(a), b)); }},
      {"mean", [](Graph&, Var a, Var b) { return mean(mul(a, b)); }},
      {"concat",
       [](Graph&, Var a, Var b) {
         const Var rows[] = {a, b};
         const Var cols[] = {a, tanh(b)};
         return add(sum(tanh(concat_rows(rows))), sum(sigmoid(concat_cols(cols))));
       }},
      {"slice_cols", [](Graph&, Var a, Var) { return sum(tanh(slice_cols(a, 1, 2))); }},
      {"gather_scatter",
       [pick](Graph&, Var a, Var) {
         Var gathered = gather_rows(a, pick);
         return sum(tanh(scatter_rows(gathered, std::vector<std::size_t>{4, 1, 3}, 5)));
       }},
      {"max_pool", [rows_mask](Graph&, Var a, Var b) { return sum(mul(max_pool_rows(a, rows_mask), slice_rows(b, 0, 1))); }},
      {"mean_pool", [rows_mask](Graph&, Var a, Var b) { return sum(mul(mean_pool_rows(a, rows_mask), slice_rows(b, 1, 1))); }},
      {"softmax",
       [rows_mask, cols_mask](Graph&, Var a, Var b) {
         return sum(mul(masked_softmax_rows(a, rows_mask, cols_mask), b));
       }},
      {"layer_norm",
       [](Graph&, Var a, Var b) {
         return sum(mul(layer_norm_rows(a, slice_rows(b, 0, 1), slice_rows(b, 1, 1)), b));
       }},
      {"bce",
       [](Graph&, Var a, Var b) {
         Var p = sigmoid(sum(mul(a, b)));
         return add(bce(p, 1), scale(bce(p, 0), 0.5));
       }},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    Rng rng(17);
    ParameterStore store;
    store.add("a", random_matrix(rng, 3, 4));
    store.add("b", random_matrix(rng, 3, 4));
    const double err = finite_difference_check(
        store, [&](Graph& g) { return c.build(g, g.param(0), g.param(1)); }, 1e-5);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("embedding lookup gradient skips the PAD row") {
  ParameterStore store;
  const ParamId table = store.add("emb", Tensor::matrix(3, 2, {0, 0, 1, 2, 3, 4}));
  Graph g(&store);
  const std::vector<std::int32_t> ids{0, 2, 2, 1};
  const GradMap grads = grad(g, sum(embedding_lookup(g.param(table), ids)));
  CHECK(grads.at(table) == Tensor::matrix(3, 2, {0, 0, 1, 1, 2, 2}));
  CHECK_THROWS_AS(embedding_lookup(g.param(table), std::vector<std::int32_t>{3}), ContractViolation);
}

TEST_CASE("pooling and softmax reject fully masked input") {
  Graph g;
  Var x = g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const Mask none{0, 0};
  CHECK_THROWS_AS(max_pool_rows(x, none), ContractViolation);
  CHECK_THROWS_AS(mean_pool_rows(x, none), ContractViolation);
  CHECK_THROWS_AS(masked_softmax_rows(x, {}, none), ContractViolation);
}

TEST_CASE("adam_step") {
  SUBCASE("first step with unit gradient moves by lr / (1 + eps)") {
    ParameterStore store;
    const ParamId w = store.add("w", Tensor::row({0.5, -0.25, 2.0}));
    AdamState state;
    GradMap grads{{w, Tensor::row({1.0, 1.0, 1.0})}};
    adam_step(store, grads, state, {});
    const double expected = -1e-3 * (1.0 / (1.0 + 1e-8));
    CHECK(store.value(w)[0] - 0.5 == doctest::Approx(expected).epsilon(1e-9));
    CHECK(store.value(w)[1] + 0.25 == doctest::Approx(expected).epsilon(1e-9));
    CHECK(store.value(w)[2] - 2.0 == doctest::Approx(expected).epsilon(1e-9));
    CHECK(state.step == 1);
  }
  SUBCASE("zero gradient is a no-op") {
    ParameterStore store;
    const ParamId w = store.add("w", Tensor::row({0.5, -0.25}));
    AdamState state;
    GradMap grads{{w, Tensor::row({0.0, 0.0})}};
    for (int i = 0; i < 3; ++i) adam_step(store, grads, state, {});
    CHECK(store.value(w) == Tensor::row({0.5, -0.25}));
    CHECK(state.step == 3);
  }
  SUBCASE("constant positive gradient decreases the parameter monotonically") {
    ParameterStore store;
    const ParamId w = store.add("w", Tensor::scalar(1.0));
    AdamState state;
    GradMap grads{{w, Tensor::scalar(1.0)}};
    const double start = store.value(w).item();
    adam_step(store, grads, state, {});
    const double after_one = store.value(w).item();
    adam_step(store, grads, state, {});
    CHECK(after_one < start);
    CHECK(store.value(w).item() < after_one);
  }
  SUBCASE("shape mismatch is a contract violation") {
    ParameterStore store;
    const ParamId w = store.add("w", Tensor::row({0.5, -0.25}));
    AdamState state;
    GradMap grads{{w, Tensor::row({1.0, 1.0, 1.0})}};
    CHECK_THROWS_AS(adam_step(store, grads, state, {}), ContractViolation);
  }
}

TEST_CASE("dropout") {
  Rng rng(5);
  Graph g;
  Tensor values({1, 10000});
  Rng fill(9);
  for (std::size_t i = 0; i < values.numel(); ++i) values[i] = fill.uniform(0.5, 1.5);
  Var x = g.constant(values);

  CHECK(dropout(x, 0.0, rng, true).value() == values);
  CHECK(dropout(x, 0.2, rng, false).value() == values);
  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ContractViolation);

  const Tensor& out = dropout(x, 0.5, rng, true).value();
  double in_mean = 0.0, out_mean = 0.0;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < values.numel(); ++i) {
    in_mean += values[i];
    out_mean += out[i];
    if (out[i] == 0.0) {
      ++zeros;
    } else {
      CHECK(out[i] == doctest::Approx(2.0 * values[i]));
    }
  }
  CHECK(std::abs(out_mean / in_mean - 1.0) < 0.05);
  CHECK(zeros > 4500);
  CHECK(zeros < 5500);
}
