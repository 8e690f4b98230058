#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "testutil.hpp"

// End-to-end checks of the command line binary: exit codes and the
// machine-parseable diagnostic line. Everything runs offline.

namespace {

struct CliResult {
  int status = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
#ifdef ANNOTEVAL_CLI_PATH
  const std::string cli = ANNOTEVAL_CLI_PATH;
#else
  const std::string cli = "annoteval";
#endif
  const auto out = std::filesystem::temp_directory_path() / "annoteval-cli-test.txt";
  const std::string cmd = cli + " " + args + " > " + out.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  CliResult res;
  res.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  res.output = ss.str();
  return res;
}

std::string data(const char* rel) { return (testutil::data_dir() / rel).string(); }

}  // namespace

TEST_CASE("validate exits 0 on the clean sample corpus") {
  CliResult r = run_cli("validate --corpus " + data("corpus/sample"));
  CHECK(r.status == 0);
  CHECK(r.output.find("corpus clean") != std::string::npos);
}

TEST_CASE("validate reports an out-of-bounds span with doc and index") {
  CliResult r = run_cli("validate --corpus " + data("fixtures/invalid/span_out_of_bounds.json"));
  CHECK(r.status == 1);
  CHECK(r.output.find("code=InvalidSpan") != std::string::npos);
  CHECK(r.output.find("doc=bad-span") != std::string::npos);
  CHECK(r.output.find("index=0") != std::string::npos);
}

TEST_CASE("validate reports unknown labels") {
  CliResult r = run_cli("validate --corpus " + data("fixtures/invalid/unknown_label.json"));
  CHECK(r.status == 1);
  CHECK(r.output.find("code=UnknownLabel") != std::string::npos);
  CHECK(r.output.find("label=XX") != std::string::npos);
}

TEST_CASE("stats over an empty directory is an EmptyCorpus failure") {
  testutil::TempDir tmp("empty-corpus");
  CliResult r = run_cli("stats --corpus " + tmp.path().string());
  CHECK(r.status == 1);
  CHECK(r.output.find("code=EmptyCorpus") != std::string::npos);
}

TEST_CASE("usage errors exit 3") {
  CHECK(run_cli("evaluate --corpus x --predictions y --out z").status == 3);  // --seed missing
  CHECK(run_cli("annotate --corpus " + data("corpus/sample") + " --out /tmp/x").status == 3);
  CHECK(run_cli("frobnicate").status == 3);
}

TEST_CASE("evaluate rejects predictions for unknown documents") {
  testutil::TempDir tmp("mismatch");
  auto preds = tmp.path() / "preds.tsv";
  std::ofstream(preds) << "doc_id\tsentence_index\tsurface\tlabel\texplanation\n"
                       << "ghost\t\tmot\tTR-OM\t\n";
  CliResult r = run_cli("evaluate --corpus " + data("fixtures/eval3/corpus") +
                        " --predictions " + preds.string() + " --seed 1 --out " +
                        (tmp.path() / "out").string());
  CHECK(r.status == 1);
  CHECK(r.output.find("code=DocSetMismatch") != std::string::npos);
  CHECK(r.output.find("ghost") != std::string::npos);
}

TEST_CASE("annotate --replay with an empty store fails per document") {
  testutil::TempDir tmp("no-store");
  CliResult r = run_cli("annotate --corpus " + data("fixtures/eval3/corpus") + " --replay " +
                        tmp.path().string() + " --out " + (tmp.path() / "out").string());
  CHECK(r.status == 2);
  CHECK(r.output.find("code=NotFound") != std::string::npos);
}

TEST_CASE("annotate resumes over existing transcripts without touching the provider") {
  // Every document already has a transcript, so the live path skips them all
  // and the (unreachable) provider is never contacted.
  testutil::TempDir tmp("resume");
  auto out = tmp.path() / "out";
  std::filesystem::create_directories(out / "transcripts");
  for (const auto& e : std::filesystem::directory_iterator(
           testutil::data_dir() / "fixtures" / "replay" / "run-fixture"))
    std::filesystem::copy_file(e.path(), out / "transcripts" / e.path().filename());

  auto cfg = tmp.path() / "provider.json";
  std::ofstream(cfg) << R"({"endpoint": "http://127.0.0.1:1/never", "model": "none",)"
                     << R"( "credential_env": "ANNOTEVAL_UNSET_KEY", "max_attempts": 1,)"
                     << R"( "backoff_base_s": 0})";
  CliResult r = run_cli("annotate --corpus " + data("corpus/sample") + " --provider-config " +
                        cfg.string() + " --out " + out.string());
  CHECK(r.status == 0);
  CHECK(r.output.find("skip sample-deepl-001") != std::string::npos);
  CHECK(std::filesystem::exists(out / "predictions.tsv"));
}

TEST_CASE("compare prints no differences for identical reports") {
  CliResult r = run_cli("compare " + data("fixtures/compare/report_long.json") + " " +
                        data("fixtures/compare/report_long.json"));
  CHECK(r.status == 0);
  CHECK(r.output.find("no differences") != std::string::npos);
}

TEST_CASE("compare renders the label accuracy drop between the fixture runs") {
  CliResult r = run_cli("compare " + data("fixtures/compare/report_long.json") + " " +
                        data("fixtures/compare/report_short.json"));
  CHECK(r.status == 0);
  CHECK(r.output.find("pct_correctly_labeled") != std::string::npos);
  CHECK(r.output.find("-0.300") != std::string::npos);
}

TEST_CASE("compare rejects disjoint document sets") {
  testutil::TempDir tmp("cmp-mismatch");
  auto other = tmp.path() / "other.json";
  {
    auto j = nlohmann::json::parse(std::ifstream(
        testutil::data_dir() / "fixtures" / "compare" / "report_long.json"));
    j["documents"][0]["doc_id"] = "renamed";
    std::ofstream(other) << j.dump(2);
  }
  CliResult r = run_cli("compare " + data("fixtures/compare/report_long.json") + " " +
                        other.string());
  CHECK(r.status == 1);
  CHECK(r.output.find("code=DocSetMismatch") != std::string::npos);
  CHECK(r.output.find("renamed") != std::string::npos);
}

TEST_CASE("evaluate --trace prints the matching trace") {
  testutil::TempDir tmp("trace");
  CliResult r = run_cli("evaluate --corpus " + data("fixtures/eval3/corpus") +
                        " --predictions " + data("fixtures/eval3/predictions.tsv") +
                        " --bootstrap-b 1000 --seed 1 --trace --out " +
                        (tmp.path() / "out").string());
  CHECK(r.status == 0);
  CHECK(r.output.find("doc eval-a:") != std::string::npos);
  CHECK(r.output.find("-> kept") != std::string::npos);
}
