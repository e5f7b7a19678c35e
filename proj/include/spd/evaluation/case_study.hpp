#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "spd/matchers/aggregation.hpp"
#include "spd/matchers/match_model.hpp"

namespace spd {

/// Utterance-profile score table of one pair together with its aggregation.
struct CaseStudy {
  ScoreMatrix scores;
  AggregationStrategy strategy;
  AggregationResult result;
  std::vector<std::string> utterance_labels;  // u1.. by default
  std::vector<std::string> profile_labels;    // p1.. by default
};

CaseStudy case_study_from_matrix(const ScoreMatrix& scores, const AggregationStrategy& strategy = {});

/// Throws UnsupportedOperation for models without an utterance-profile
/// score matrix (C2P and ESIM models).
CaseStudy case_study_matrix(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona);

/// {"profiles": [...], "utterances": [...], "scores": n_p x n_c rows,
///  "s_m": [...], "total": s, "g": g, "strategy": label}
nlohmann::json case_study_json(const CaseStudy& study);

/// Profiles as rows, utterances as columns, then the s_m row.
std::string case_study_text(const CaseStudy& study);

}  // namespace spd
