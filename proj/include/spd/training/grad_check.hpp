#pragma once

#include <cstdint>
#include <string_view>

#include "spd/matchers/match_model.hpp"

namespace spd {

/// Small-dimension variant of a named architecture (every dim <= 8).
ModelConfig toy_model_config(std::string_view name, std::size_t vocab_size = 24);

/// Finite-difference check of the BCE loss (label 1) of a toy model on a
/// random 2-utterance x 2-profile pair. The bilinear form is replaced by a
/// uniform(-1, 1) matrix, redrawn with the inputs until some U2P score is
/// positive. Returns the max relative gradient error.
double model_gradient_check(std::string_view name, std::uint64_t seed, double eps = 1e-5);

}  // namespace spd
