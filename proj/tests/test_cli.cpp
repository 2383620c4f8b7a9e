#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "cli_pipeline.hpp"

namespace fs = std::filesystem;
using radtext::testing::run_cli;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("radtext_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(radtext::cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(radtext::cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(radtext::cli::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("smoke path with default flags") {
  const auto dir = fresh_dir("smoke");
  for (const char* cmd : {"synth-lda", "lda-fit", "eval"}) {
    const auto r = run_cli({"--out", dir.string(), cmd});
    REQUIRE_MESSAGE(r.status == 0, r.err);
  }
  const std::string csv = slurp(dir / "eval_perplexity.csv");
  CHECK(csv.starts_with("documents,tokens,log_likelihood,perplexity\n500,20000,"));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest_lda-fit.json"));
  CHECK(m["command"] == "lda-fit");
  CHECK(m["seed"] == 1);
  CHECK(m["version"] == radtext::cli::kVersion);
  CHECK(m["inputs"].size() == 2);
  CHECK(m["outputs"].contains("lda.rtx"));
  fs::remove_all(dir);
}

TEST_CASE("lda-select writes the perplexity curve") {
  const auto dir = fresh_dir("select");
  REQUIRE(run_cli({"--out", dir.string(), "synth-lda", "--docs", "200"}).status == 0);
  const auto r = run_cli({"--out", dir.string(), "lda-select", "--candidates", "2,5,10", "--iterations", "60"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const std::string csv = slurp(dir / "perplexity.csv");
  CHECK(csv.find("2,") != std::string::npos);
  CHECK(csv.find("10,") != std::string::npos);
  CHECK(slurp(dir / "perplexity_selection.tsv").starts_with("chosen\t"));
  fs::remove_all(dir);
}

TEST_CASE("errors are one-line JSON records") {
  const auto dir = fresh_dir("errors");
  SUBCASE("missing input") {
    const auto r = run_cli({"--out", dir.string(), "lda-fit"});
    CHECK(r.status == 1);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const auto j = nlohmann::json::parse(r.err);
    CHECK(j["command"] == "lda-fit");
    CHECK(j["error"] == "error");
  }
  SUBCASE("usage error") {
    const auto r = run_cli({"lda-fit", "--no-such-flag"});
    CHECK(r.status == 2);
    CHECK(nlohmann::json::parse(r.err)["error"] == "usage_error");
  }
  SUBCASE("no subcommand") { CHECK(run_cli({}).status == 2); }
  SUBCASE("bad config value") {
    REQUIRE(run_cli({"--out", dir.string(), "synth-lda", "--docs", "0"}).status == 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("config file sets subcommand options and is recorded as an input") {
  const auto dir = fresh_dir("config");
  {
    std::ofstream f(dir / "run.toml");
    f << "seed = 7\n[synth-lda]\ndocs = 40\nlength = 10\n";
  }
  const auto r = run_cli({"--config", (dir / "run.toml").string(), "--out", dir.string(), "synth-lda"});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest_synth-lda.json"));
  CHECK(m["seed"] == 7);
  CHECK(m["inputs"].contains((dir / "run.toml").string()));
  CHECK(slurp(dir / "docs.tsv").find("39\t") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("seed changes the artifacts") {
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  REQUIRE(run_cli({"--out", a.string(), "--seed", "1", "synth-features"}).status == 0);
  REQUIRE(run_cli({"--out", b.string(), "--seed", "2", "synth-features"}).status == 0);
  CHECK(slurp(a / "features.txt") != slurp(b / "features.txt"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("planted keyword suite through the CLI") {
  const auto dir = fresh_dir("keywords");
  REQUIRE(run_cli({"--out", dir.string(), "synth-keywords"}).status == 0);
  const auto r = run_cli({"--out", dir.string(), "interpret", "--doc-model", (dir / "topic_model.rtx").string(),
                          "--doc-keywords", (dir / "keywords.tsv").string(), "--regression",
                          (dir / "regression.rtx").string(), "--embeddings", (dir / "embedding.rtx").string(),
                          "--ground-truth", (dir / "ground_truth.tsv").string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(slurp(dir / "recall.csv") == "metric,value\nr_at_1,1\nimages,20\n");
  fs::remove_all(dir);
}

TEST_CASE("replay detects changed inputs") {
  const auto dir = fresh_dir("tamper");
  REQUIRE(run_cli({"--out", dir.string(), "synth-lda", "--docs", "50"}).status == 0);
  REQUIRE(run_cli({"--out", dir.string(), "lda-fit", "--iterations", "20"}).status == 0);
  {
    std::ofstream f(dir / "vocab.tsv", std::ios::app);
    f << "extra\t1\n";
  }
  const auto r = run_cli({"replay", "--manifest", (dir / "manifest_lda-fit.json").string()});
  CHECK(r.status == 1);
  CHECK(nlohmann::json::parse(r.err)["error"] == "data_error");
  fs::remove_all(dir);
}

TEST_CASE("every subcommand replays byte-identically") {
  const auto dir = fresh_dir("replay");
  const auto failures = radtext::testing::replay_every_command(dir);
  for (const auto& f : failures) MESSAGE(f);
  CHECK(failures.empty());
  fs::remove_all(dir);
}
