#include "spd/autodiff/optim.hpp"

#include <algorithm>
#include <cmath>

#include "spd/errors.hpp"

namespace spd::ad {

void adam_step(ParameterStore& params, const GradMap& grads, AdamState& state,
               const AdamOptions& options) {
  for (const auto& [id, g] : grads) {
    require(id < params.size(), "adam_step: unknown parameter id");
    require(params.trainable(id), "adam_step: gradient given for frozen parameter " + params.name(id));
    require(params.value(id).same_shape(g),
            "adam_step: gradient shape mismatch for " + params.name(id));
    for (auto* moments : {&state.first_moment, &state.second_moment}) {
      auto it = moments->find(id);
      if (it == moments->end()) {
        moments->emplace(id, Tensor::zeros_like(params.value(id)));
      } else {
        require(it->second.same_shape(g), "adam_step: state shape mismatch for " + params.name(id));
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (const auto& [id, g] : grads) {
    Tensor& theta = params.value(id);
    Tensor& m = state.first_moment.at(id);
    Tensor& v = state.second_moment.at(id);
    for (std::size_t i = 0; i < theta.numel(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g[i];
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
  }
}

double finite_difference_check(ParameterStore& params, const LossBuilder& loss, double eps) {
  require(eps > 0.0, "finite_difference_check: eps must be positive");

  GradMap analytic;
  {
    Graph graph(&params);
    analytic = grad(graph, loss(graph));
  }

  auto evaluate = [&]() {
    Graph graph(&params, /*record=*/false);
    const double value = loss(graph).value().item();
    if (!std::isfinite(value)) throw NumericError("finite_difference_check: non-finite loss");
    return value;
  };

  double worst = 0.0;
  for (ParamId id : params.trainable_ids()) {
    const Tensor& g = analytic.at(id);
    for (std::size_t i = 0; i < params.value(id).numel(); ++i) {
      const double original = params.value(id)[i];
      params.value(id)[i] = original + eps;
      const double up = evaluate();
      params.value(id)[i] = original - eps;
      const double down = evaluate();
      params.value(id)[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      worst = std::max(worst, std::abs(g[i] - numeric) / std::max(1.0, std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace spd::ad
