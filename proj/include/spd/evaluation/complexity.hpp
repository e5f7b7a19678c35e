#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "spd/evaluation/ranking.hpp"

namespace spd {

struct ComplexityReport {
  std::string model;
  std::size_t parameters = 0;
  std::size_t sets = 0;
  std::size_t pairs_scored = 0;
  double inference_seconds = 0.0;  // wall clock, informational
};

ComplexityReport complexity_report(const MatchModel& model, const std::vector<EncodedSet>& sets);
nlohmann::json to_json(const ComplexityReport& report);

}  // namespace spd
