#include "spd/evaluation/complexity.hpp"

#include <chrono>

namespace spd {

ComplexityReport complexity_report(const MatchModel& model, const std::vector<EncodedSet>& sets) {
  ComplexityReport r;
  r.model = model.config().name();
  r.parameters = count_parameters(model);
  r.sets = sets.size();
  for (const auto& s : sets) r.pairs_scored += s.candidates.size();
  const auto start = std::chrono::steady_clock::now();
  rank_all(model, sets);
  r.inference_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

nlohmann::json to_json(const ComplexityReport& r) {
  return {{"model", r.model},
          {"parameters", r.parameters},
          {"sets", r.sets},
          {"pairs_scored", r.pairs_scored},
          {"inference_seconds", r.inference_seconds}};
}

}  // namespace spd
