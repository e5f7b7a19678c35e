#include "spd/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spd/cli/config.hpp"
#include "spd/data/synthetic.hpp"
#include "spd/errors.hpp"
#include "spd/evaluation/case_study.hpp"
#include "spd/evaluation/complexity.hpp"
#include "spd/evaluation/metrics.hpp"
#include "spd/evaluation/ranking.hpp"
#include "spd/training/checkpoint.hpp"
#include "spd/training/grad_check.hpp"
#include "spd/training/trainer.hpp"

namespace spd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* sub, Common& c, bool out_required) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--config", c.config, "Run config file (key = value lines or JSON)");
  sub->add_option("--set", c.sets, "Config override KEY=VALUE (repeatable)")->take_all();
  auto* out = sub->add_option("--out", c.out, "Output directory");
  if (out_required) out->required();
}

RunConfig load_config(const Common& c) {
  RunConfig config;
  if (!c.config.empty()) config.merge_file(c.config);
  for (const auto& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

std::string dump(const json& j, int indent = 2) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return fs::path(dir);
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                    std::uint64_t seed, const json& args) {
  json versions = {{"spd", kVersion},
                   {"checkpoint_format", 1},
                   {"compiler", __VERSION__},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cli11", CLI11_VERSION}};
  const json manifest = {{"command", command}, {"args", args},           {"seed", seed},
                         {"config", config.values()}, {"config_hash", config.hash()},
                         {"versions", versions}};
  write_text(dir / "manifest.json", dump(manifest) + "\n");
}

std::vector<CandidateSet> read_split(const fs::path& dir, const std::string& split) {
  const fs::path path = dir / (split + ".jsonl");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_candidate_sets(in);
}

json stats_json(const SplitStats& s) {
  return {{"pairs", s.pairs},
          {"utterances_per_context", s.utterances_per_context},
          {"words_per_utterance", s.words_per_utterance},
          {"profiles_per_persona", s.profiles_per_persona},
          {"words_per_profile", s.words_per_profile}};
}

json metrics_json(const EvalMetrics& m) {
  const std::string n = std::to_string(m.candidates);
  return {{"sets", m.sets},
          {"candidates", m.candidates},
          {"R_" + n + "@1", m.r_at_1},
          {"R_" + n + "@2", m.r_at_2},
          {"R_" + n + "@5", m.r_at_5},
          {"MRR_" + n, m.mrr}};
}

json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}, {"values", s.values}}; }

std::optional<ad::Tensor> make_embeddings(const RunConfig& config, const Vocab& vocab, std::size_t dim,
                                          std::uint64_t seed, std::ostream& err) {
  const std::string source = config.get_string("embeddings");
  if (source == "random") return std::nullopt;
  if (source == "gaussian") {
    return synthetic_word_vectors(vocab.size(), dim, config.get_double("embedding_sd"), mix_seed(seed, 0xe1));
  }
  std::ifstream in(source, std::ios::binary);
  if (!in) throw IoError("cannot open word vectors " + source);
  Rng rng(mix_seed(seed, 0xe2));
  WordVectorLoad loaded = load_word_vectors(in, vocab.tokens(), dim, rng);
  err << "word vectors cover " << loaded.found << " of " << vocab.size() << " tokens\n";
  return std::move(loaded.table);
}

// "u1".."un" style labels are kept for the table; texts ride along in JSON.
json with_texts(json j, const std::vector<std::string>& utterances, const std::vector<std::string>& profiles,
                const TruncationLimits& limits) {
  auto tail = [](const std::vector<std::string>& v, std::size_t keep) {
    return std::vector<std::string>(v.end() - static_cast<std::ptrdiff_t>(std::min(keep, v.size())), v.end());
  };
  j["utterance_texts"] = tail(utterances, limits.max_utterances);
  j["profile_texts"] = tail(profiles, limits.max_profiles);
  return j;
}

int cmd_build_dataset(const Common& c, const std::string& in, bool synthetic, const std::string& variant,
                      std::optional<std::size_t> n_eval, std::ostream& out, std::ostream& err) {
  RunConfig config = load_config(c);
  if (!variant.empty()) config.set("variant", variant);
  if (n_eval) config.set_json("n_eval", json(*n_eval));
  if (synthetic == !in.empty()) throw ConfigError("build-dataset needs exactly one of --in or --synthetic");

  PmpcSplits splits;
  if (synthetic) {
    splits = make_synthetic_splits(config.synthetic_config(c.seed));
  } else {
    const PmpcConfig pc = config.pmpc_config(c.seed);
    if (!fs::exists(in)) throw IoError("no such input " + in);
    splits = build_pmpc_splits(load_dialogue_splits(in, pc.variant, c.seed), pc);
  }
  const fs::path dir = prepare_out(c.out);
  json stats;
  for (const auto& [name, sets] : {std::pair<std::string, const std::vector<CandidateSet>*>{"train", &splits.train},
                                   {"valid", &splits.valid},
                                   {"test", &splits.test}}) {
    std::ostringstream text;
    write_candidate_sets(text, *sets);
    write_text(dir / (name + ".jsonl"), text.str());
    stats[name] = sets->empty() ? json(nullptr) : stats_json(compute_stats(*sets));
    err << name << ": " << sets->size() << " candidate sets\n";
  }
  stats["skipped_speakers"] = splits.skipped_speakers;
  stats["shared_personas"] = shared_personas(splits);
  write_text(dir / "stats.json", dump(stats) + "\n");
  write_manifest(dir, "build-dataset", config, c.seed,
                 {{"in", synthetic ? std::string("synthetic") : in}});
  out << dump(stats) << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& data, const std::string& model_name, std::size_t runs,
              std::ostream& out, std::ostream& err) {
  RunConfig config = load_config(c);
  if (!model_name.empty()) config.set("model", model_name);
  if (runs == 0) throw ConfigError("--runs must be at least 1");
  const TruncationLimits limits = config.limits();
  const auto train_sets = read_split(data, "train");
  const auto valid_sets = read_split(data, "valid");
  if (train_sets.empty()) throw IoError("empty training split in " + data);
  const Vocab vocab = build_vocab(token_corpus(train_sets), config.get_uint("min_count"));
  const TrainingData td = make_training_data(train_sets, vocab, limits);
  const auto valid = encode_sets(valid_sets, vocab, limits);
  const ModelConfig mc = config.model_config(vocab.size());
  const fs::path dir = prepare_out(c.out);
  write_manifest(dir, "train", config, c.seed, {{"data", data}, {"runs", runs}});

  json summary = {{"model", mc.name()}, {"runs", json::array()}};
  std::vector<double> best;
  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t seed = c.seed + r;
    const TrainConfig tc = config.train_config(seed);
    const fs::path run_dir = prepare_out((dir / ("seed_" + std::to_string(seed))).string());
    MatchModel model(mc, seed, make_embeddings(config, vocab, mc.encoder.input_dim, seed, err));
    std::ofstream metrics(run_dir / "metrics.jsonl", std::ios::binary);
    if (!metrics) throw IoError("cannot write " + (run_dir / "metrics.jsonl").string());
    const RunRecord record = train(model, td, valid, tc, [&](const EpochRecord& e, const MatchModel&) {
      json line = {{"epoch", e.epoch},         {"steps", e.steps}, {"train_loss", e.train_loss},
                   {"learning_rate", e.learning_rate}};
      if (e.valid) line["valid"] = metrics_json(*e.valid);
      metrics << dump(line, -1) << '\n';
      char buf[160];
      std::snprintf(buf, sizeof buf, "[seed %llu] epoch %zu/%zu loss %.4f", static_cast<unsigned long long>(seed),
                    e.epoch + 1, tc.epochs, e.train_loss);
      err << buf;
      if (e.valid) {
        std::snprintf(buf, sizeof buf, " valid R@1 %.4f", e.valid->r_at_1);
        err << buf;
      }
      err << '\n';
    });
    metrics.close();
    save_checkpoint(run_dir / "model.ckpt", model, vocab, limits);
    const json run = {{"seed", seed},
                      {"best_epoch", record.best_epoch},
                      {"best_valid_r_at_1", record.best_metric},
                      {"steps", record.epochs.empty() ? 0 : record.epochs.back().steps},
                      {"parameters", count_parameters(model)}};
    write_text(run_dir / "run.json", dump(run) + "\n");
    summary["runs"].push_back(run);
    best.push_back(record.best_metric);
  }
  summary["valid_r_at_1"] = summary_json(summarize_values(best));
  write_text(dir / "summary.json", dump(summary) + "\n");
  out << dump(summary) << "\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::vector<std::string>& models, const std::string& data,
                 const std::string& split, std::size_t n, std::ostream& out) {
  const RunConfig config = load_config(c);
  const auto sets = read_split(data, split);
  if (sets.empty()) throw IoError("empty split " + split + " in " + data);
  json runs = json::array();
  std::vector<double> r1, r2, r5, m;
  std::size_t candidates = 0;
  for (const auto& path : models) {
    const Checkpoint ck = load_checkpoint(path);
    const MatchModel model = ck.instantiate();
    const auto results = rank_all(model, encode_sets(sets, ck.vocab, ck.limits), n);
    const EvalMetrics em = summarize(results);
    candidates = em.candidates;
    json run = metrics_json(em);
    run["model"] = ck.config.name();
    runs.push_back(run);
    r1.push_back(em.r_at_1);
    r2.push_back(em.r_at_2);
    r5.push_back(em.r_at_5);
    m.push_back(em.mrr);
  }
  const std::string k = std::to_string(candidates);
  const json report = {{"split", split},
                       {"sets", sets.size()},
                       {"candidates", candidates},
                       {"metrics",
                        {{"R_" + k + "@1", summary_json(summarize_values(r1))},
                         {"R_" + k + "@2", summary_json(summarize_values(r2))},
                         {"R_" + k + "@5", summary_json(summarize_values(r5))},
                         {"MRR_" + k, summary_json(summarize_values(m))}}},
                       {"runs", runs}};
  const fs::path dir = prepare_out(c.out);
  write_text(dir / "evaluation.json", dump(report) + "\n");
  write_manifest(dir, "evaluate", config, c.seed, {{"models", models}, {"data", data}, {"split", split}, {"n", n}});
  out << dump(report) << "\n";
  return 0;
}

int cmd_score(const Common& c, const std::string& model_path, const std::vector<std::string>& utterances,
              const std::vector<std::string>& profiles, std::ostream& out) {
  const RunConfig config = load_config(c);
  const Checkpoint ck = load_checkpoint(model_path);
  const MatchModel model = ck.instantiate();
  const PaddedSide ctx = encode_context(utterances, ck.vocab, ck.limits);
  const PaddedSide per = encode_persona(profiles, ck.vocab, ck.limits);
  const json result = {{"model", ck.config.name()}, {"logit", model.score(ctx, per)},
                       {"g", model.probability(ctx, per)}};
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c.out);
    write_text(dir / "score.json", dump(result) + "\n");
    write_manifest(dir, "score", config, c.seed, {{"model", model_path}});
  }
  out << dump(result, -1) << "\n";
  return 0;
}

struct CaseStudyArgs {
  std::string matrix, model, data, split = "test";
  std::size_t index = 0;
  std::vector<std::string> utterances, profiles;
};

int cmd_case_study(const Common& c, const CaseStudyArgs& a, std::ostream& out) {
  const RunConfig config = load_config(c);
  CaseStudy study;
  json extra;
  if (!a.matrix.empty()) {
    if (!a.model.empty()) throw ConfigError("case-study takes --matrix or --model, not both");
    std::ifstream in(a.matrix, std::ios::binary);
    if (!in) throw IoError("cannot open " + a.matrix);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError("bad matrix file " + a.matrix + ": " + e.what());
    }
    const json rows = j.is_object() ? j.at("scores") : j;
    AggregationStrategy strategy;
    try {
      strategy = {parse_reduce(config.get_string("profile_reduce")), parse_reduce(config.get_string("utterance_reduce")),
                  config.get_bool("clamp_at_zero")};
    } catch (const ContractViolation& e) {
      throw ConfigError(e.what());
    }
    study = case_study_from_matrix(ScoreMatrix::from_profile_rows(rows.get<std::vector<std::vector<double>>>()),
                                   strategy);
  } else {
    if (a.model.empty()) throw ConfigError("case-study needs --matrix or --model");
    const Checkpoint ck = load_checkpoint(a.model);
    const MatchModel model = ck.instantiate();
    std::vector<std::string> utterances = a.utterances, profiles = a.profiles;
    if (!a.data.empty()) {
      const auto sets = read_split(a.data, a.split);
      if (a.index >= sets.size()) throw ConfigError("--index out of range for split " + a.split);
      utterances = sets[a.index].context;
      profiles = sets[a.index].correct();
    }
    if (utterances.empty() || profiles.empty()) {
      throw ConfigError("case-study needs --data or both --utterance and --profile");
    }
    study = case_study_matrix(model, encode_context(utterances, ck.vocab, ck.limits),
                              encode_persona(profiles, ck.vocab, ck.limits));
    extra = with_texts(json::object(), utterances, profiles, ck.limits);
  }
  json j = case_study_json(study);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  const std::string text = case_study_text(study);
  const fs::path dir = prepare_out(c.out);
  write_text(dir / "case_study.json", dump(j) + "\n");
  write_text(dir / "case_study.txt", text);
  write_manifest(dir, "case-study", config, c.seed,
                 {{"matrix", a.matrix}, {"model", a.model}, {"data", a.data}, {"split", a.split}, {"index", a.index}});
  out << text;
  return 0;
}

int cmd_grad_check(const Common& c, const std::string& model, const std::string& precision, std::ostream& out,
                   std::ostream& err) {
  const RunConfig config = load_config(c);
  if (precision != "f64") {
    throw UnsupportedOperation("precision '" + precision + "' is not supported; only f64 is implemented");
  }
  std::vector<std::string> names;
  if (model == "all") {
    names = model_names();
  } else {
    names = {model};
  }
  constexpr double kTolerance = 1e-6;
  json results = json::array();
  bool ok = true;
  for (const auto& name : names) {
    double e = 0.0;
    try {
      e = model_gradient_check(name, c.seed);
    } catch (const ContractViolation& ex) {
      throw ConfigError(ex.what());
    }
    const bool pass = e < kTolerance;
    ok = ok && pass;
    const json line = {{"model", name}, {"max_relative_error", e}, {"pass", pass}};
    out << dump(line, -1) << "\n";
    results.push_back(line);
  }
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c.out);
    write_text(dir / "grad_check.json", dump(results) + "\n");
    write_manifest(dir, "grad-check", config, c.seed, {{"model", model}, {"precision", precision}});
  }
  if (!ok) {
    err << dump(json{{"error", "check"}, {"message", "gradient error above tolerance"}}, -1) << "\n";
    return 1;
  }
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& models, const std::string& data,
               const std::string& split, std::ostream& out) {
  const RunConfig config = load_config(c);
  const auto sets = read_split(data, split);
  if (sets.empty()) throw IoError("empty split " + split + " in " + data);
  json reports = json::array();
  std::ostringstream table;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-18s %12s %8s %14s\n", "model", "parameters", "sets", "inference_s");
  table << buf;
  for (const auto& path : models) {
    const Checkpoint ck = load_checkpoint(path);
    const MatchModel model = ck.instantiate();
    const ComplexityReport r = complexity_report(model, encode_sets(sets, ck.vocab, ck.limits));
    json j = to_json(r);
    j["checkpoint"] = path;
    reports.push_back(j);
    std::snprintf(buf, sizeof buf, "%-18s %12zu %8zu %14.3f\n", r.model.c_str(), r.parameters, r.sets,
                  r.inference_seconds);
    table << buf;
  }
  const json report = {{"split", split}, {"stats", stats_json(compute_stats(sets))}, {"models", reports}};
  const fs::path dir = prepare_out(c.out);
  write_text(dir / "report.json", dump(report) + "\n");
  write_text(dir / "report.txt", table.str());
  write_manifest(dir, "report", config, c.seed, {{"models", models}, {"data", data}, {"split", split}});
  out << table.str();
  return 0;
}

void print_error(std::ostream& err, const char* kind, const std::string& message) {
  err << dump(json{{"error", kind}, {"message", message}}, -1) << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speaker persona detection: dataset construction, training and evaluation", "spd"};
  app.require_subcommand(1);
  Common common;

  auto* build = app.add_subcommand("build-dataset", "Build candidate-set splits from dialogues");
  add_common(build, common, true);
  std::string in, variant;
  bool synthetic = false;
  std::optional<std::size_t> n_eval;
  build->add_option("--in", in, "Dialogue JSONL file or Persona-Chat directory");
  build->add_flag("--synthetic", synthetic, "Generate the keyword-persona corpus instead");
  build->add_option("--variant", variant, "Persona variant: original or revised");
  build->add_option("--n-eval", n_eval, "Distractors per evaluation set");

  auto* train_cmd = app.add_subcommand("train", "Train one or more seeds of a model");
  add_common(train_cmd, common, true);
  std::string data, model_name;
  std::size_t runs = 1;
  train_cmd->add_option("--data", data, "Dataset directory from build-dataset")->required();
  train_cmd->add_option("--model", model_name, "Architecture, e.g. u2p-bilstm");
  train_cmd->add_option("--runs", runs, "Number of seeds (seed, seed + 1, ...)");

  auto* evaluate = app.add_subcommand("evaluate", "Rank candidate sets with trained checkpoints");
  add_common(evaluate, common, true);
  std::vector<std::string> checkpoints;
  std::string split = "test";
  std::size_t n = 9;
  evaluate->add_option("--model", checkpoints, "Checkpoint files (one per seed)")->required();
  evaluate->add_option("--data", data, "Dataset directory")->required();
  evaluate->add_option("--split", split, "train, valid or test");
  evaluate->add_option("--n", n, "Expected distractors per set (0: any)");

  auto* score = app.add_subcommand("score", "Score one context against one persona");
  add_common(score, common, false);
  std::string checkpoint;
  std::vector<std::string> utterances, profiles;
  score->add_option("--model", checkpoint, "Checkpoint file")->required();
  score->add_option("--utterance", utterances, "Context utterance (repeatable)")->required();
  score->add_option("--profile", profiles, "Persona profile (repeatable)")->required();

  auto* case_study = app.add_subcommand("case-study", "Utterance-profile score table of one pair");
  add_common(case_study, common, true);
  CaseStudyArgs cs;
  case_study->add_option("--matrix", cs.matrix, "JSON score matrix (profile rows)");
  case_study->add_option("--model", cs.model, "U2P checkpoint");
  case_study->add_option("--data", cs.data, "Dataset directory");
  case_study->add_option("--split", cs.split, "Split of --data");
  case_study->add_option("--index", cs.index, "Candidate set index");
  case_study->add_option("--utterance", cs.utterances, "Context utterance (repeatable)");
  case_study->add_option("--profile", cs.profiles, "Persona profile (repeatable)");

  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient check on toy models");
  add_common(grad, common, false);
  std::string grad_model = "all", precision = "f64";
  grad->add_option("--model", grad_model, "Architecture or 'all'");
  grad->add_option("--precision", precision, "Floating point precision");

  auto* report = app.add_subcommand("report", "Parameter counts and inference time");
  add_common(report, common, true);
  std::string report_split = "valid";
  report->add_option("--model", checkpoints, "Checkpoint files")->required();
  report->add_option("--data", data, "Dataset directory")->required();
  report->add_option("--split", report_split, "Split to time");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (build->parsed()) return cmd_build_dataset(common, in, synthetic, variant, n_eval, out, err);
    if (train_cmd->parsed()) return cmd_train(common, data, model_name, runs, out, err);
    if (evaluate->parsed()) return cmd_evaluate(common, checkpoints, data, split, n, out);
    if (score->parsed()) return cmd_score(common, checkpoint, utterances, profiles, out);
    if (case_study->parsed()) return cmd_case_study(common, cs, out);
    if (grad->parsed()) return cmd_grad_check(common, grad_model, precision, out, err);
    if (report->parsed()) return cmd_report(common, checkpoints, data, report_split, out);
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return 2;
  } catch (const IoError& e) {
    print_error(err, "io", e.what());
    return 1;
  } catch (const UnsupportedOperation& e) {
    print_error(err, "unsupported", e.what());
    return 1;
  } catch (const NumericError& e) {
    print_error(err, "numeric", e.what());
    return 1;
  } catch (const ConstructionError& e) {
    print_error(err, "construction", e.what());
    return 1;
  } catch (const ContractViolation& e) {
    print_error(err, "contract", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace spd::cli
