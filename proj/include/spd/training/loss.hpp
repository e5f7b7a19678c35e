#pragma once

#include <cstddef>
#include <cstdint>

#include "spd/autodiff/optim.hpp"

namespace spd {

/// -[y log g + (1 - y) log(1 - g)] with g clamped to [1e-7, 1 - 1e-7].
double bce_loss(double g, int label);

struct TrainConfig {
  double learning_rate = 1e-3;
  double decay_factor = 0.96;
  std::uint64_t decay_steps = 5000;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::uint64_t max_steps = 0;  // 0: no step limit
  std::size_t n_train = 1;      // distractors per context in training
  bool resample_distractors = true;
  ad::AdamOptions adam;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Staircase decay: lr * decay^floor(step / decay_steps).
double lr_at_step(std::uint64_t step, const TrainConfig& config);

}  // namespace spd
