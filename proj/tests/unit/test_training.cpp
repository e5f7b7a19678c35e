#include <cmath>
#include <limits>
#include <tuple>

#include "doctest.h"
#include "spd/autodiff/ops.hpp"
#include "spd/autodiff/optim.hpp"
#include "spd/data/synthetic.hpp"
#include "spd/errors.hpp"
#include "spd/training/checkpoint.hpp"
#include "spd/training/loss.hpp"
#include "spd/training/trainer.hpp"
#include "test_util.hpp"

using namespace spd;
using spd::testing::toy_config;

namespace {

struct Corpus {
  PmpcSplits splits;
  Vocab vocab;
  TruncationLimits limits;
  TrainingData data;
  std::vector<EncodedSet> valid;
};

Corpus small_corpus(std::size_t train_pairs = 40, std::uint64_t seed = 1) {
  SyntheticConfig sc;
  sc.train_pairs = train_pairs;
  sc.eval_sets = 20;
  sc.seed = seed;
  Corpus c;
  c.splits = make_synthetic_splits(sc);
  c.vocab = build_vocab(token_corpus(c.splits.train));
  c.data = make_training_data(c.splits.train, c.vocab, c.limits);
  c.valid = encode_sets(c.splits.valid, c.vocab, c.limits);
  return c;
}

ModelConfig corpus_config(const char* name, const Corpus& c) {
  ModelConfig m = toy_config(name, c.vocab.size());
  m.dropout = 0.2;
  return m;
}

}  // namespace

TEST_CASE("bce_loss") {
  CHECK(bce_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(0.5, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(0.9, 1) == doctest::Approx(-std::log(0.9)).epsilon(1e-15));
  CHECK(bce_loss(0.9, 1) == doctest::Approx(0.1054).epsilon(1e-3));
  CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(1e-7)).epsilon(1e-12));
  CHECK(std::isfinite(bce_loss(1.0, 0)));
  CHECK_THROWS_AS(bce_loss(0.5, 2), ContractViolation);
}

TEST_CASE("graph losses agree with the scalar loss") {
  for (double z : {-30.0, -3.0, -0.2, 0.0, 0.7, 4.0, 30.0}) {
    for (int y : {0, 1}) {
      ad::Graph g;
      ad::Var s = g.constant(ad::Tensor::scalar(z));
      const double via_prob = ad::bce(ad::sigmoid(s), y).value().item();
      const double via_logit = ad::bce_logit(s, y).value().item();
      const double scalar = bce_loss(1.0 / (1.0 + std::exp(-z)), y);
      CHECK(via_prob == doctest::Approx(scalar).epsilon(1e-12));
      if (std::abs(z) < 10.0) CHECK(via_logit == doctest::Approx(scalar).epsilon(1e-9));
    }
  }
  ad::ParameterStore store;
  store.add("z", ad::Tensor::scalar(0.3));
  for (int y : {0, 1}) {
    CHECK(ad::finite_difference_check(store, [&](ad::Graph& g) { return ad::bce_logit(g.param(0), y); }, 1e-6) <
          1e-8);
  }
  ad::Graph g;
  // Saturated logits still carry a gradient.
  ad::Var big = g.constant(ad::Tensor::scalar(50.0));
  CHECK(ad::bce_logit(big, 0).value().item() == doctest::Approx(50.0));
}

TEST_CASE("lr_at_step") {
  const TrainConfig c;
  CHECK(lr_at_step(0, c) == 1e-3);
  CHECK(lr_at_step(4999, c) == 1e-3);
  CHECK(lr_at_step(5000, c) == doctest::Approx(1e-3 * 0.96).epsilon(1e-15));
  CHECK(lr_at_step(10000, c) == doctest::Approx(1e-3 * 0.96 * 0.96).epsilon(1e-15));
  CHECK(lr_at_step(14999, c) == lr_at_step(10000, c));
}

TEST_CASE("TrainConfig validation") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = {};
  c.decay_factor = 1.5;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = {};
  c.decay_factor = 1.0;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("fresh model loss is near ln 2") {
  const Corpus c = small_corpus();
  for (const char* name : {"c2p-bow", "u2p-bow", "u2p-bilstm"}) {
    CAPTURE(name);
    MatchModel model(ModelConfig::preset(name, c.vocab.size()), 3);
    std::vector<std::tuple<std::size_t, std::size_t, int>> examples;
    for (std::size_t i = 0; i < c.data.size(); ++i) {
      examples.emplace_back(i, c.data.correct[i], 1);
      examples.emplace_back(i, c.data.distractors[i][0], 0);
    }
    CHECK(std::abs(mean_loss(model, c.data, examples) - std::log(2.0)) < 0.1);
  }
}

TEST_CASE("one small Adam step lowers the example's loss") {
  const Corpus c = small_corpus();
  for (const auto& name : model_names()) {
    CAPTURE(name);
    ModelConfig config = corpus_config(name.c_str(), c);
    config.dropout = 0.0;
    MatchModel model(config, 2);
    for (int y : {1, 0}) {
      const std::size_t p = y == 1 ? c.data.correct[0] : c.data.distractors[0][0];
      auto loss_of = [&] { return bce_loss(model.probability(c.data.contexts[0], c.data.personas[p]), y); };
      const double before = loss_of();
      ad::Graph graph(&model.params());
      ad::Var loss = ad::bce(model.forward(graph, c.data.contexts[0], c.data.personas[p], {}).probability, y);
      ad::AdamState state;
      ad::AdamOptions options;
      options.lr = 1e-5;
      ad::adam_step(model.params(), ad::grad(graph, loss), state, options);
      CHECK(loss_of() < before);
    }
  }
}

TEST_CASE("training is deterministic and selects the best epoch") {
  const Corpus c = small_corpus();
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 5;
  const ModelConfig config = corpus_config("u2p-bow", c);
  MatchModel a(config, 5), b(config, 5);
  std::vector<double> metrics;
  const RunRecord ra = train(a, c.data, c.valid, tc, [&](const EpochRecord& e, const MatchModel&) {
    metrics.push_back(e.valid->r_at_1);
  });
  const RunRecord rb = train(b, c.data, c.valid, tc);
  CHECK(serialize_checkpoint(a, c.vocab, c.limits) == serialize_checkpoint(b, c.vocab, c.limits));
  REQUIRE(ra.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) CHECK(ra.epochs[e].train_loss == rb.epochs[e].train_loss);
  for (double m : metrics) CHECK(ra.best_metric >= m);
  CHECK(ra.epochs[ra.best_epoch].best);
  CHECK(ra.epochs.back().steps == 3 * ((2 * c.data.size() + 7) / 8));

  // The returned model carries the selected epoch's weights.
  const auto results = rank_all(a, c.valid);
  CHECK(summarize(results).r_at_1 == ra.best_metric);

  MatchModel other(config, 6);
  tc.seed = 6;
  train(other, c.data, c.valid, tc);
  CHECK(serialize_checkpoint(other, c.vocab, c.limits) != serialize_checkpoint(a, c.vocab, c.limits));
}

TEST_CASE("fixed distractors and step limit") {
  const Corpus c = small_corpus(16);
  TrainConfig tc;
  tc.epochs = 1000;
  tc.max_steps = 25;
  tc.resample_distractors = false;
  ModelConfig config = corpus_config("u2p-bow", c);
  config.dropout = 0.0;
  config.aggregation.clamp_at_zero = false;
  MatchModel model(config, 1);
  const RunRecord run = train(model, c.data, {}, tc);
  CHECK(run.epochs.back().steps == 25);
  CHECK(run.epochs.back().train_loss < run.epochs.front().train_loss);
  CHECK(run.best_epoch == run.epochs.size() - 1);
}

TEST_CASE("divergence names the step and the op") {
  const Corpus c = small_corpus();
  MatchModel model(corpus_config("c2p-bow", c), 1);
  model.params().value(*model.bilinear())[0] = std::numeric_limits<double>::infinity();
  TrainConfig tc;
  tc.epochs = 1;
  try {
    train(model, c.data, {}, tc);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("step 0") != std::string::npos);
    CHECK(what.find("op '") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  const Corpus c = small_corpus();
  for (const auto& name : model_names()) {
    CAPTURE(name);
    ModelConfig config = corpus_config(name.c_str(), c);
    config.aggregation = {Reduce::Sum, Reduce::Max, false};
    config.bilinear_identity = 2.5;
    const MatchModel model(config, 9);
    const std::string bytes = serialize_checkpoint(model, c.vocab, c.limits);
    const Checkpoint ck = parse_checkpoint(bytes);
    CHECK(ck.vocab == c.vocab);
    CHECK(ck.config.name() == name);
    CHECK(ck.config.aggregation == config.aggregation);
    const MatchModel back = ck.instantiate();
    CHECK(serialize_checkpoint(back, ck.vocab, ck.limits) == bytes);
    CHECK(back.score(c.valid[0].context, c.valid[0].candidates[1]) ==
          model.score(c.valid[0].context, c.valid[0].candidates[1]));
  }
  const MatchModel model(corpus_config("u2p-bow", c), 9);
  std::string bytes = serialize_checkpoint(model, c.vocab, c.limits);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 3)), IoError);
  CHECK_THROWS_AS(parse_checkpoint("garbage"), IoError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bytes), IoError);

  const auto path = std::filesystem::temp_directory_path() / "spd_test.ckpt";
  save_checkpoint(path, model, c.vocab, c.limits);
  CHECK(serialize_checkpoint(load_checkpoint(path).instantiate(), c.vocab, c.limits) ==
        serialize_checkpoint(model, c.vocab, c.limits));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
