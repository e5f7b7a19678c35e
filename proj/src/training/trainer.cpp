#include "spd/training/trainer.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <tuple>

#include "spd/autodiff/ops.hpp"
#include "spd/autodiff/optim.hpp"
#include "spd/errors.hpp"

namespace spd {

TrainingData make_training_data(const std::vector<CandidateSet>& train, const Vocab& vocab,
                                const TruncationLimits& limits) {
  TrainingData data;
  std::map<Persona, std::size_t> index;
  auto persona_id = [&](const Persona& p) {
    const auto [it, fresh] = index.emplace(p, data.personas.size());
    if (fresh) data.personas.push_back(encode_persona(p, vocab, limits));
    return it->second;
  };
  for (const auto& cs : train) {
    data.contexts.push_back(encode_context(cs.context, vocab, limits));
    data.correct.push_back(persona_id(cs.correct()));
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
      if (i != cs.correct_index) others.push_back(persona_id(cs.candidates[i]));
    }
    data.distractors.push_back(std::move(others));
  }
  return data;
}

namespace {

using Example = std::tuple<std::size_t, std::size_t, int>;  // context, persona, label

std::vector<Example> epoch_examples(const TrainingData& data, const TrainConfig& config, Rng& rng) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.emplace_back(i, data.correct[i], 1);
    if (config.resample_distractors) {
      // Uniform over the pool without replacement, skipping the correct persona.
      const std::size_t pool = data.personas.size();
      if (pool <= config.n_train) {
        throw ConstructionError("training persona pool has " + std::to_string(pool) + " personas, " +
                                std::to_string(config.n_train + 1) + " needed");
      }
      std::vector<std::size_t> picked;
      while (picked.size() < config.n_train) {
        const std::size_t j = rng.below(pool);
        if (j == data.correct[i] || std::find(picked.begin(), picked.end(), j) != picked.end()) continue;
        picked.push_back(j);
      }
      for (std::size_t j : picked) out.emplace_back(i, j, 0);
    } else {
      require(data.distractors[i].size() >= config.n_train, "not enough stored distractors");
      for (std::size_t k = 0; k < config.n_train; ++k) out.emplace_back(i, data.distractors[i][k], 0);
    }
  }
  rng.shuffle(out);
  return out;
}

std::vector<ad::Tensor> snapshot(const ad::ParameterStore& store) {
  std::vector<ad::Tensor> out;
  for (std::size_t id = 0; id < store.size(); ++id) out.push_back(store.value(id));
  return out;
}

void restore(ad::ParameterStore& store, const std::vector<ad::Tensor>& saved) {
  for (std::size_t id = 0; id < store.size(); ++id) store.value(id) = saved[id];
}

}  // namespace

RunRecord train(MatchModel& model, const TrainingData& data, const std::vector<EncodedSet>& valid,
                const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  require(data.size() > 0, "no training examples");
  RunRecord run;
  run.seed = config.seed;
  ad::AdamState adam;
  ad::AdamOptions options = config.adam;
  std::vector<ad::Tensor> best;
  std::uint64_t step = 0;
  bool done = false;

  for (std::size_t epoch = 0; epoch < config.epochs && !done; ++epoch) {
    Rng order(mix_seed(config.seed, 0x1000 + epoch));
    Rng noise(mix_seed(config.seed, 0x2000 + epoch));
    const auto examples = epoch_examples(data, config, order);
    const ForwardMode mode{true, model.config().dropout, &noise};

    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < examples.size(); start += config.batch_size) {
      const std::size_t end = std::min(examples.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      ad::GradMap batch_grads;
      double batch_loss = 0.0;
      try {
        for (std::size_t k = start; k < end; ++k) {
          const auto [c, p, y] = examples[k];
          ad::Graph graph(&model.params());
          ad::Var loss = ad::bce_logit(model.forward(graph, data.contexts[c], data.personas[p], mode).logit, y);
          batch_loss += loss.value().item();
          for (auto& [id, g] : ad::grad(graph, loss)) {
            auto it = batch_grads.find(id);
            if (it == batch_grads.end()) {
              batch_grads.emplace(id, std::move(g));
            } else {
              it->second += g;
            }
          }
        }
        for (auto& [id, g] : batch_grads) {
          for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= scale;
        }
        options.lr = lr_at_step(step, config);
        ad::adam_step(model.params(), batch_grads, adam, options);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + "): " + e.what());
      }
      loss_total += batch_loss * scale;
      ++batches;
      ++step;
      if (config.max_steps > 0 && step >= config.max_steps) {
        done = true;
        break;
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.steps = step;
    record.train_loss = loss_total / static_cast<double>(batches);
    record.learning_rate = options.lr;
    if (!valid.empty()) {
      const auto results = rank_all(model, valid);
      record.valid = summarize(results);
      record.best = best.empty() || record.valid->r_at_1 > run.best_metric;
    } else {
      record.best = true;
    }
    if (record.best) {
      best = snapshot(model.params());
      run.best_epoch = epoch;
      run.best_metric = record.valid ? record.valid->r_at_1 : 0.0;
    }
    run.epochs.push_back(record);
    if (on_epoch) on_epoch(record, model);
  }
  restore(model.params(), best);
  return run;
}

double mean_loss(const MatchModel& model, const TrainingData& data,
                 const std::vector<std::tuple<std::size_t, std::size_t, int>>& examples) {
  require(!examples.empty(), "mean_loss of no examples");
  double total = 0.0;
  for (const auto& [c, p, y] : examples) {
    total += bce_loss(model.probability(data.contexts[c], data.personas[p]), y);
  }
  return total / static_cast<double>(examples.size());
}

}  // namespace spd
