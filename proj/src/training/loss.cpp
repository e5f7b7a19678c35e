#include "spd/training/loss.hpp"

#include <algorithm>
#include <cmath>

#include "spd/autodiff/ops.hpp"
#include "spd/errors.hpp"

namespace spd {

double bce_loss(double g, int label) {
  require(label == 0 || label == 1, "label must be 0 or 1");
  const double p = std::clamp(g, ad::kProbabilityClamp, 1.0 - ad::kProbabilityClamp);
  const double y = label;
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "learning rate must be positive");
  require(decay_factor > 0.0 && decay_factor <= 1.0, "decay factor must lie in (0, 1]");
  require(decay_steps > 0, "decay interval must be positive");
  require(batch_size > 0, "batch size must be positive");
  require(epochs > 0, "epoch count must be positive");
  require(n_train > 0, "need at least one training distractor");
}

double lr_at_step(std::uint64_t step, const TrainConfig& config) {
  const auto stairs = static_cast<double>(step / config.decay_steps);
  return config.learning_rate * std::pow(config.decay_factor, stairs);
}

}  // namespace spd
