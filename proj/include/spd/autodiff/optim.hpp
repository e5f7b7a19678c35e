#pragma once

#include <cstdint>
#include <functional>
#include <map>

#include "spd/autodiff/graph.hpp"
#include "spd/autodiff/parameters.hpp"

namespace spd::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators keyed by parameter; created as zeros on first use.
struct AdamState {
  std::map<ParamId, Tensor> first_moment;
  std::map<ParamId, Tensor> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of every parameter present in `grads`.
void adam_step(ParameterStore& params, const GradMap& grads, AdamState& state,
               const AdamOptions& options);

// Builds the scalar loss on a fresh graph bound to the store.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients with central differences
/// (f(x + eps) - f(x - eps)) / (2 eps) on every trainable coordinate and
/// returns max |analytic - numeric| / max(1, |numeric|). The store is
/// restored bit-exactly before returning.
double finite_difference_check(ParameterStore& params, const LossBuilder& loss, double eps);

}  // namespace spd::ad
