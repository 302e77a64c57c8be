#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <string>

#include "temp_dir.hpp"

using testutil::TempDir;
using testutil::slurp;

namespace {

const std::string kCli = EMEVAL_CLI_PATH;
const std::filesystem::path kDataDir = EMEVAL_DATA_DIR;

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  CliResult result;
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) result.output += buf;
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace

TEST_CASE("cli: help exits 0, usage errors exit 1") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("evaluate --help").exit_code == 0);
  CHECK(run_cli("").exit_code == 1);                 // subcommand required
  CHECK(run_cli("frobnicate").exit_code == 1);       // unknown subcommand
  CHECK(run_cli("extract").exit_code == 1);          // missing required flags
  CHECK(run_cli("evaluate --bogus-flag x").exit_code == 1);
}

TEST_CASE("cli: data errors exit 2") {
  auto missing = run_cli("evaluate --manifest /nonexistent.json --wheel /nonexistent.json "
                         "--lemma /no.json --synonyms /no.json");
  CHECK(missing.exit_code == 2);

  TempDir tmp;
  tmp.write("records.jsonl", R"({"sample_id": "a", "token_count": 3})"
                             "\nthis line is not json\n");
  auto corrupt = run_cli("stats --records " + (tmp.path / "records.jsonl").string() +
                         " --output-dir " + (tmp.path / "out").string());
  CHECK(corrupt.exit_code == 2);
  CHECK(corrupt.output.find(":2:") != std::string::npos);
}

TEST_CASE("cli: stats writes histograms") {
  TempDir tmp;
  tmp.write("records.jsonl",
            R"({"sample_id": "a", "token_count": 3, "labels": ["x"]})"
            "\n"
            R"({"sample_id": "b", "token_count": 8, "labels": ["x", "y"], "duration": 2.5})"
            "\n");
  auto r = run_cli("stats --records " + (tmp.path / "records.jsonl").string() +
                   " --token-bin-width 5 --output-dir " + (tmp.path / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(tmp.path / "out/token_hist.csv") == "bin_lo,bin_hi,count\n0,5,1\n5,10,1\n");
  CHECK(std::filesystem::exists(tmp.path / "out/duration_hist.csv"));
}

TEST_CASE("cli: identity filter pipeline is a no-op") {
  TempDir tmp;
  std::string records;
  for (int i = 0; i < 10; ++i) {
    records += R"({"sample_id": "s)" + std::to_string(i) +
               R"(", "token_count": )" + std::to_string(5 + i) + R"(, "av_match": true})" + "\n";
  }
  tmp.write("records.jsonl", records);
  auto r = run_cli("filter --records " + (tmp.path / "records.jsonl").string() +
                   " --low 0 --high 100 --consistency off --output-dir " +
                   (tmp.path / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("kept 10 of 10") != std::string::npos);
  auto report = slurp(tmp.path / "out/filter_report.csv");
  CHECK(report.find(",removed,") == std::string::npos);
  // Every input line survives into filtered.jsonl.
  auto filtered = slurp(tmp.path / "out/filtered.jsonl");
  CHECK(std::count(filtered.begin(), filtered.end(), '\n') == 10);
}

TEST_CASE("cli: extract with the lexicon") {
  TempDir tmp;
  tmp.write("raw.jsonl",
            R"({"sample_id": "a", "text": "Looks happy, maybe a bit nervous."})"
            "\n"
            R"({"sample_id": "b", "text": "A wooden table."})"
            "\n");
  auto r = run_cli("extract --input " + (tmp.path / "raw.jsonl").string() + " --output " +
                   (tmp.path / "labels.jsonl").string() + " --lexicon " +
                   (kDataDir / "lexicon.tsv").string() + " --sentiment");
  CHECK(r.exit_code == 0);
  auto out = slurp(tmp.path / "labels.jsonl");
  CHECK(out.find(R"("labels":["happy","nervous"])") != std::string::npos);
  CHECK(out.find(R"("labels":[])") != std::string::npos);
  CHECK(out.find(R"("sentiment":"neutral")") != std::string::npos);
}

TEST_CASE("cli: evaluate end to end with a config file") {
  TempDir tmp;
  tmp.write("truth/basic.jsonl",
            R"({"sample_id": "b1", "label": "happy"})"
            "\n"
            R"({"sample_id": "b2", "label": "sad"})"
            "\n");
  tmp.write("manifests/basic.json", R"({
    "name": "MER2023", "task": "basic", "split": "toy", "expected_count": 2,
    "taxonomy": ["happy", "sad"],
    "ground_truth_path": "../truth/basic.jsonl"})");
  tmp.write("preds/MER2023.jsonl",
            R"({"sample_id": "b1", "labels": ["happy"]})"
            "\n"
            R"({"sample_id": "b2", "labels": ["sad"]})"
            "\n");
  tmp.write("run.json", R"({
    "manifests": ["manifests/basic.json"],
    "wheels": [")" + (kDataDir / "wheels/plutchik.json").string() + R"("],
    "lemma": ")" + (kDataDir / "lemma.json").string() + R"(",
    "synonyms": ")" + (kDataDir / "synonyms.json").string() + R"(",
    "predictions_dir": "preds",
    "output_dir": "out"})");

  auto r = run_cli("evaluate --config " + (tmp.path / "run.json").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("MER2023,Mean") != std::string::npos);
  CHECK(r.output.find("100.00,100.00") != std::string::npos);
  CHECK(slurp(tmp.path / "out/report.csv") == "MER2023,Mean\n100.00,100.00\n");
}

TEST_CASE("cli: fuse-check pass/fail table and exit codes") {
  auto r = run_cli("fuse-check --seeds 1");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("attention_fuse") != std::string::npos);
  CHECK(r.output.find("qformer_fuse") != std::string::npos);
  CHECK(r.output.find("autoregressive_nll") != std::string::npos);
  CHECK(r.output.find("PASS") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);

  // An absurd threshold forces a failure exit.
  auto fail = run_cli("fuse-check --seeds 1 --kernel nll --threshold 1e-30");
  CHECK(fail.exit_code == 2);
  CHECK(fail.output.find("FAIL") != std::string::npos);

  auto bad_eps = run_cli("fuse-check --eps 1");
  CHECK(bad_eps.exit_code == 2);
}
