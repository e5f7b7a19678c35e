#include "spd/evaluation/case_study.hpp"

#include <algorithm>
#include <cstdio>

#include "spd/errors.hpp"

namespace spd {

using json = nlohmann::json;

namespace {

std::vector<std::string> numbered(char prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, prefix) + std::to_string(i + 1));
  return out;
}

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

CaseStudy case_study_from_matrix(const ScoreMatrix& scores, const AggregationStrategy& strategy) {
  CaseStudy s;
  s.scores = scores;
  s.strategy = strategy;
  s.result = aggregate_scores(scores, strategy);
  s.utterance_labels = numbered('u', scores.utterances);
  s.profile_labels = numbered('p', scores.profiles);
  return s;
}

CaseStudy case_study_matrix(const MatchModel& model, const PaddedSide& context, const PaddedSide& persona) {
  const ModelConfig& c = model.config();
  if (c.framing != Framing::U2P || c.family != Family::SentenceEncoding) {
    throw UnsupportedOperation("case study needs a U2P sentence-encoding model, got " + c.name());
  }
  ad::Graph graph(&model.params(), false);
  const auto out = model.forward(graph, context, persona, {});
  ScoreMatrix valid_only = *out.scores;
  // Keep only real sentences so the table shows what was aggregated.
  std::vector<std::size_t> rows, cols;
  for (std::size_t m = 0; m < valid_only.utterances; ++m) {
    if (valid_only.utterance_ok(m)) rows.push_back(m);
  }
  for (std::size_t n = 0; n < valid_only.profiles; ++n) {
    if (valid_only.profile_ok(n)) cols.push_back(n);
  }
  std::vector<double> values;
  for (std::size_t m : rows) {
    for (std::size_t n : cols) values.push_back(valid_only.at(m, n));
  }
  return case_study_from_matrix(ScoreMatrix::dense(rows.size(), cols.size(), std::move(values)), c.aggregation);
}

json case_study_json(const CaseStudy& s) {
  json table = json::array();
  for (std::size_t n = 0; n < s.scores.profiles; ++n) {
    json row = json::array();
    for (std::size_t m = 0; m < s.scores.utterances; ++m) row.push_back(s.scores.at(m, n));
    table.push_back(row);
  }
  return {{"profiles", s.profile_labels},  {"utterances", s.utterance_labels},
          {"scores", table},               {"s_m", s.result.per_utterance},
          {"total", s.result.total},       {"g", s.result.g},
          {"strategy", s.strategy.label()}};
}

std::string case_study_text(const CaseStudy& s) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{""};
  header.insert(header.end(), s.utterance_labels.begin(), s.utterance_labels.end());
  grid.push_back(header);
  for (std::size_t n = 0; n < s.scores.profiles; ++n) {
    std::vector<std::string> row{s.profile_labels[n]};
    for (std::size_t m = 0; m < s.scores.utterances; ++m) row.push_back(cell(s.scores.at(m, n)));
    grid.push_back(row);
  }
  std::vector<std::string> sm{"s_m"};
  for (double v : s.result.per_utterance) sm.push_back(cell(v));
  grid.push_back(sm);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : grid) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string pad(width[i] - row[i].size(), ' ');
      out += i == 0 ? row[i] + pad : "  " + pad + row[i];
    }
    out += '\n';
  }
  out += "s = " + cell(s.result.total) + "  g = " + cell(s.result.g) + "  (" + s.strategy.label() + ")\n";
  return out;
}

}  // namespace spd
