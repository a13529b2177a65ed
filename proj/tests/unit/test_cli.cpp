#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "semsin/cli.hpp"
#include "test_util.hpp"

using namespace semsin;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "semsin");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string error_code_of(const Result& r) {
  return nlohmann::json::parse(r.err.substr(0, r.err.find('\n'))).at("error").at("code").get<std::string>();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("semsin_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors are machine-readable") {
  auto r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(error_code_of(r) == "UsageError");
  r = run({"check", "--data", test::fixture_path("horton.jsonl"), "--bogus"});
  CHECK(r.code == 2);
  CHECK(error_code_of(r) == "UsageError");
  r = run({"train", "--data", test::fixture_path("horton.jsonl")});
  CHECK(r.code == 2);
  CHECK(r.err.find("--seed") != std::string::npos);
  r = run({"xval", "--data", test::fixture_path("horton.jsonl"), "--seed", "1", "--ablation", "everything"});
  CHECK(r.code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("help lists every flag with its default") {
  const auto r = run({"xval", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--data", "--embeddings", "--mode", "--k", "--layers", "--lr", "--dropout", "--gamma", "--beta",
                           "--batch", "--pos-rate", "--neg-rate", "--epochs", "--seed", "--ablation", "--out", "--jobs"})
    CHECK_MESSAGE(r.out.find(flag) != std::string::npos, flag);
  CHECK(r.out.find("[20]") != std::string::npos);
  CHECK(r.out.find("[cross-topic]") != std::string::npos);
  CHECK(run({"grid-layers", "--help"}).out.find("[5]") != std::string::npos);
}

TEST_CASE("check validates a corpus") {
  auto r = run({"check", "--data", test::fixture_path("horton.jsonl")});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("valid") == true);
  CHECK(j.at("pairs") == 1);

  const auto dir = scratch("check");
  std::ofstream(dir / "bad.jsonl") << test::read_file(test::fixture_path("horton.jsonl")) << "{oops\n";
  r = run({"check", "--data", (dir / "bad.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.out).at("malformed_lines").size() == 1);
}

TEST_CASE("module errors become error records") {
  const auto r = run({"xval", "--data", test::fixture_path("horton.jsonl"), "--seed", "1"});
  CHECK(r.code == 1);
  CHECK(error_code_of(r) == "TooFewTopics");
}

TEST_CASE("synth, train, predict and eval work together") {
  const auto dir = scratch("pipeline");
  auto r = run({"synth", "--docs", "20", "--seed", "4", "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "corpus.jsonl"));
  CHECK(fs::exists(dir / "truth.jsonl"));
  const auto corpus = (dir / "corpus.jsonl").string();
  r = run({"train", "--data", corpus, "--seed", "3", "--epochs", "2", "--out", (dir / "model").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  for (const char* f : {"model.ckpt", "train_report.jsonl", "metrics.json", "timing.json"})
    CHECK_MESSAGE(fs::exists(dir / "model" / f), f);
  const auto metrics = nlohmann::json::parse(test::read_file((dir / "model" / "metrics.json").string()));
  CHECK(metrics.at("config").at("layers") == 3);  // the grid-layers sweep bound must not leak in
  CHECK(metrics.at("config").at("batch") == 20);
  const auto ckpt = (dir / "model" / "model.ckpt").string();
  r = run({"predict", "--data", corpus, "--model", ckpt});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("probability").get<double>() >= 0.0);
    ++n;
  }
  CHECK(n == 60);
  r = run({"eval", "--data", corpus, "--model", ckpt});
  CHECK(r.code == 0);
  CHECK(r.out.find("Method") != std::string::npos);
  r = run({"eval", "--data", corpus, "--model", (dir / "missing.ckpt").string()});
  CHECK(r.code == 2);
}

TEST_CASE("gradcheck subcommand") {
  const auto r = run({"gradcheck"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"passed\":true") != std::string::npos);
  CHECK(r.out.find("full-model") != std::string::npos);
}
