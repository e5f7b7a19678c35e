#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "spd/cli/commands.hpp"
#include "spd/cli/config.hpp"
#include "spd/data/tokenizer.hpp"
#include "spd/errors.hpp"
#include "spd/evaluation/metrics.hpp"
#include "spd/matchers/aggregation.hpp"
#include "spd/matchers/match_model.hpp"
#include "spd/training/checkpoint.hpp"
#include "spd/training/grad_check.hpp"

namespace py = pybind11;
using namespace spd;

namespace {

py::dict aggregate(const std::vector<std::vector<double>>& profile_rows, const std::string& profile,
                   const std::string& utterance, bool clamp) {
  AggregationStrategy st{parse_reduce(profile), parse_reduce(utterance), clamp};
  const AggregationResult r = aggregate_scores(ScoreMatrix::from_profile_rows(profile_rows), st);
  py::dict d;
  d["s_m"] = r.per_utterance;
  d["total"] = r.total;
  d["g"] = r.g;
  return d;
}

py::dict metrics(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& correct) {
  if (scores.size() != correct.size()) throw ContractViolation("scores and correct differ in length");
  std::vector<RankingResult> results;
  for (std::size_t i = 0; i < scores.size(); ++i) results.push_back(rank_scores(scores[i], correct[i]));
  if (results.empty()) throw ContractViolation("no candidate sets");
  const EvalMetrics m = summarize(results);
  std::vector<std::size_t> ranks;
  for (const auto& r : results) ranks.push_back(r.rank);
  py::dict d;
  d["ranks"] = ranks;
  d["r_at_1"] = m.r_at_1;
  d["r_at_2"] = m.r_at_2;
  d["r_at_5"] = m.r_at_5;
  d["mrr"] = m.mrr;
  return d;
}

struct LoadedModel {
  Checkpoint checkpoint;
  MatchModel model;

  explicit LoadedModel(const std::string& path) : checkpoint(load_checkpoint(path)), model(checkpoint.instantiate()) {}

  std::pair<double, double> score(const std::vector<std::string>& utterances,
                                  const std::vector<std::string>& profiles) const {
    const PaddedSide ctx = encode_context(utterances, checkpoint.vocab, checkpoint.limits);
    const PaddedSide per = encode_persona(profiles, checkpoint.vocab, checkpoint.limits);
    return {model.score(ctx, per), model.probability(ctx, per)};
  }
};

std::tuple<int, std::string, std::string> run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::dispatch(args, out, err);
  }
  return {code, out.str(), err.str()};
}

}  // namespace

PYBIND11_MODULE(_spd_match, m) {
  m.doc() = "Speaker persona detection matching networks";
  m.attr("__version__") = cli::kVersion;

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<UnsupportedOperation>(m, "UnsupportedOperation", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));
  m.def("aggregate", &aggregate, py::arg("profile_rows"), py::arg("profile") = "max",
        py::arg("utterance") = "sum", py::arg("clamp") = true,
        "Aggregate a profiles x utterances score table into s_m, s and g.");
  m.def("metrics", &metrics, py::arg("scores"), py::arg("correct"),
        "R@1, R@2, R@5 and MRR with pessimistic ties.");
  m.def("model_names", &model_names);
  m.def(
      "count_parameters",
      [](const std::string& name, std::size_t vocab_size) {
        return count_parameters(MatchModel(ModelConfig::preset(name, vocab_size), 0));
      },
      py::arg("name"), py::arg("vocab_size") = 1000);
  m.def(
      "gradient_check", [](const std::string& name, std::uint64_t seed) { return model_gradient_check(name, seed); },
      py::arg("name"), py::arg("seed") = 0);
  m.def("run_cli", &run_cli, py::arg("args"), "Run a CLI command; returns (exit code, stdout, stderr).");

  py::class_<LoadedModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def_property_readonly("name", [](const LoadedModel& lm) { return lm.model.config().name(); })
      .def_property_readonly("parameters", [](const LoadedModel& lm) { return count_parameters(lm.model); })
      .def("score", &LoadedModel::score, py::arg("utterances"), py::arg("profiles"),
           "Returns (logit, g) for one context and persona.");
}
