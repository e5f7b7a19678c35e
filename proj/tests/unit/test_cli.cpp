#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "spd/cli/commands.hpp"
#include "spd/cli/config.hpp"

using namespace spd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spd_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Last non-empty line of the error stream.
json error_line(const std::string& err) {
  std::string s = err;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return json::parse(s.substr(s.rfind('\n') == std::string::npos ? 0 : s.rfind('\n') + 1));
}

const std::vector<std::string> kSmall{"--set", "synthetic.train_pairs=40", "--set", "synthetic.eval_sets=15"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("RunConfig parsing and hashing") {
  cli::RunConfig c;
  const std::string h = c.hash();
  CHECK(h.size() == 16);
  c.merge_text("# comment\nepochs = 3\n\nmodel=c2p-bilstm  # trailing\ndropout = 0.5\nclamp_at_zero = false\n");
  CHECK(c.get_uint("epochs") == 3);
  CHECK(c.get_string("model") == "c2p-bilstm");
  CHECK(c.get_double("dropout") == 0.5);
  CHECK_FALSE(c.get_bool("clamp_at_zero"));
  CHECK(c.hash() != h);
  c.merge_text(R"({"epochs": 4, "learning_rate": 0.01})");
  CHECK(c.get_uint("epochs") == 4);
  CHECK(c.train_config(1).learning_rate == 0.01);
  CHECK_THROWS_AS(c.set("no_such_key", "1"), cli::ConfigError);
  CHECK_THROWS_AS(c.set("epochs", "three"), cli::ConfigError);
  CHECK_THROWS_AS(c.set("epochs", "-1"), cli::ConfigError);
  CHECK_THROWS_AS(c.set("positional", "maybe"), cli::ConfigError);
  CHECK_THROWS_AS(c.merge_text("epochs 3"), cli::ConfigError);
  c.set("model", "x2p-bow");
  CHECK_THROWS_AS(c.model_config(10), cli::ConfigError);
  CHECK(cli::RunConfig().hash() == h);
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("usage errors exit 2 with one machine-readable line") {
  Run r = run({});
  CHECK(r.code == 2);
  CHECK(error_line(r.err).at("error") == "usage");
  r = run({"train", "--data", "x", "--out", "y", "--bogus"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(error_line(r.err).at("error") == "usage");
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"grad-check", "--set", "nope=1"});
  CHECK(r.code == 2);
  CHECK(error_line(r.err).at("error") == "config");
  r = run({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--data") != std::string::npos);
}

TEST_CASE("IO failures exit 1") {
  const fs::path out = scratch("io");
  Run r = run({"train", "--data", "/nonexistent/dir", "--out", out.string()});
  CHECK(r.code == 1);
  const json e = error_line(r.err);
  CHECK(e.at("error") == "io");
  CHECK(e.at("message").get<std::string>().find("/nonexistent/dir") != std::string::npos);
  r = run({"evaluate", "--model", "/nonexistent.ckpt", "--data", "/nonexistent", "--out", out.string()});
  CHECK(r.code == 1);
  r = run({"grad-check", "--config", "/nonexistent.cfg"});
  CHECK(r.code == 1);
  fs::remove_all(out);
}

TEST_CASE("grad-check") {
  Run r = run({"grad-check", "--model", "u2p-bow", "--precision", "f64"});
  CHECK(r.code == 0);
  const json line = json::parse(r.out);
  CHECK(line.at("model") == "u2p-bow");
  CHECK(line.at("max_relative_error").get<double>() < 1e-6);
  CHECK(line.at("pass") == true);
  r = run({"grad-check", "--model", "u2p-bow", "--precision", "f32"});
  CHECK(r.code == 1);
  CHECK(error_line(r.err).at("error") == "unsupported");
  r = run({"grad-check", "--model", "bogus"});
  CHECK(r.code == 2);
}

TEST_CASE("case-study from a matrix file") {
  const fs::path out = scratch("case");
  fs::create_directories(out);
  const fs::path matrix = out / "m.json";
  std::ofstream(matrix) << "[[-0.07,-0.35,-0.22,-0.70,-1.05,-0.19],[-0.16,0.90,0.72,-0.20,0.38,-0.34],"
                           "[0.83,1.14,1.00,-0.48,0.05,-0.10],[-0.92,-1.17,-0.89,-0.64,-2.21,-0.09]]";
  const Run r = run({"case-study", "--matrix", matrix.string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(out / "case_study.json"));
  CHECK(std::abs(j.at("total").get<double>() - 3.35) < 1e-9);
  CHECK(r.out == slurp(out / "case_study.txt"));
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("command") == "case-study");
  CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
  CHECK(manifest.at("versions").contains("spd"));
  fs::remove_all(out);
}

TEST_CASE("end-to-end pipeline is reproducible") {
  const fs::path root = scratch("e2e");
  const std::string data = (root / "data").string();
  Run r = run(with({"build-dataset", "--synthetic", "--seed", "7", "--out", data}, kSmall));
  REQUIRE(r.code == 0);
  for (const char* f : {"train.jsonl", "valid.jsonl", "test.jsonl", "stats.json", "manifest.json"}) {
    CHECK(fs::exists(fs::path(data) / f));
  }
  const json stats = json::parse(slurp(fs::path(data) / "stats.json"));
  CHECK(stats.at("train").at("pairs") == 40);
  CHECK(stats.at("test").at("pairs") == 15);

  const std::vector<std::string> train_flags{"--set", "embedding_dim=16", "--set", "epochs=2", "--set",
                                             "batch_size=8", "--set", "embeddings=gaussian"};
  for (const char* dir : {"a", "b"}) {
    r = run(with({"train", "--data", data, "--model", "u2p-bow", "--seed", "3", "--runs", "2", "--out",
                  (root / dir).string()},
                 train_flags));
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"seed_3/model.ckpt", "seed_3/metrics.jsonl", "seed_4/model.ckpt", "summary.json"}) {
    CHECK(fs::exists(root / "a" / f));
    CHECK(slurp(root / "a" / f) == slurp(root / "b" / f));
  }
  CHECK(slurp(root / "a/seed_3/model.ckpt") != slurp(root / "a/seed_4/model.ckpt"));
  std::istringstream metrics(slurp(root / "a/seed_3/metrics.jsonl"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(metrics, line)) {
    const json j = json::parse(line);
    CHECK(j.contains("train_loss"));
    CHECK(j.at("valid").contains("R_10@1"));
    ++lines;
  }
  CHECK(lines == 2);
  const json summary = json::parse(slurp(root / "a/summary.json"));
  CHECK(summary.at("valid_r_at_1").at("values").size() == 2);

  const std::string c1 = (root / "a/seed_3/model.ckpt").string();
  const std::string c2 = (root / "a/seed_4/model.ckpt").string();
  for (const char* dir : {"eval1", "eval2"}) {
    r = run({"evaluate", "--model", c1, c2, "--data", data, "--split", "test", "--n", "9", "--out",
             (root / dir).string()});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(root / "eval1/evaluation.json") == slurp(root / "eval2/evaluation.json"));
  const json eval = json::parse(slurp(root / "eval1/evaluation.json"));
  CHECK(eval.at("metrics").at("R_10@1").at("values").size() == 2);
  CHECK(eval.at("metrics").contains("MRR_10"));
  r = run({"evaluate", "--model", c1, "--data", data, "--n", "4", "--out", (root / "eval3").string()});
  CHECK(r.code == 1);
  CHECK(error_line(r.err).at("error") == "contract");

  r = run({"score", "--model", c1, "--utterance", "k1 k1 f3", "--profile", "i like k1 f2", "--profile", "k9 f1"});
  REQUIRE(r.code == 0);
  const json s = json::parse(r.out);
  CHECK(s.at("g").get<double>() > 0.0);
  CHECK(s.at("g").get<double>() < 1.0);

  r = run({"case-study", "--model", c1, "--data", data, "--index", "2", "--out", (root / "case").string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(slurp(root / "case/case_study.json")).contains("profile_texts"));

  r = run({"report", "--model", c1, "--data", data, "--out", (root / "report").string()});
  REQUIRE(r.code == 0);
  const json rep = json::parse(slurp(root / "report/report.json"));
  CHECK(rep.at("models")[0].at("parameters") == 256);
  fs::remove_all(root);
}

TEST_CASE("installed binary exit codes") {
  const char* bin = std::getenv("SPD_CLI");
  if (bin == nullptr) {
    MESSAGE("SPD_CLI not set; skipping binary checks");
    return;
  }
  auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status("grad-check --model c2p-bow") == 0);
  CHECK(status("grad-check --unknown-flag") == 2);
  CHECK(status("evaluate --model /nonexistent.ckpt --data /nonexistent --out /tmp/spd_cli_bin") == 1);
  fs::remove_all("/tmp/spd_cli_bin");
}
