#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "strokepipe/dataset.hpp"
#include "support/test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const fs::path& dir, const std::string& args) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" STROKEPIPE_CLI_PATH "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::read_file(out);
  r.err = testutil::read_file(err);
  return r;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small corpus keeps the image pipelines fast; NMF rank must fit 7 training images.
const char* kSmall = "--resize 32x32 --nmf-k 3 --nmf-iters 100";

fs::path small_corpus(const std::string& name) {
  const fs::path dir = testutil::scratch_dir(name);
  const RunResult r = run(dir, "synth --out corpus --n-per-class 4 --resize 32x32");
  REQUIRE(r.exit_code == 0);
  return dir;
}

}  // namespace

TEST_CASE("extract writes one 28-wide row per sample, identically on rerun") {
  const fs::path dir = testutil::scratch_dir("cli_extract");
  REQUIRE(run(dir, "synth --out corpus").exit_code == 0);
  REQUIRE(run(dir, "extract --manifest corpus/manifest.csv --feature haralick28 --out a.csv").exit_code == 0);
  REQUIRE(run(dir, "extract --manifest corpus/manifest.csv --feature haralick28 --out b.csv").exit_code == 0);
  const std::string a = testutil::read_file(dir / "a.csv");
  CHECK(a == testutil::read_file(dir / "b.csv"));
  CHECK(count_lines(a) == 31);
  const auto rows = strokepipe::read_feature_csv(dir / "a.csv");
  REQUIRE(rows.size() == 30);
  for (const auto& r : rows) CHECK(r.size() == 28);
  CHECK(fs::exists(dir / "a.csv.config.json"));
  const json echo = json::parse(testutil::read_file(dir / "a.csv.config.json"));
  CHECK(echo.at("command") == "extract");
  CHECK(echo.at("seed") == 42);
}

TEST_CASE("an unreadable image is reported with its sample id") {
  const fs::path dir = small_corpus("cli_missing");
  std::string manifest = testutil::read_file(dir / "corpus/manifest.csv");
  const auto pos = manifest.find("images/normal_02.pgm");
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, 20, "images/missing__.pgm");
  testutil::write_bytes(dir / "corpus/manifest.csv", manifest);
  const RunResult r = run(dir, "extract --manifest corpus/manifest.csv --out f.csv");
  CHECK(r.exit_code != 0);
  const json err = json::parse(r.err);
  CHECK(err.at("error").at("code") == "io");
  CHECK(err.at("error").at("message").get<std::string>().find("normal_02") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "f.csv"));
}

TEST_CASE("predict refuses features of the wrong kind") {
  const fs::path dir = small_corpus("cli_mismatch");
  const std::string small = kSmall;
  REQUIRE(run(dir, "train --manifest corpus/manifest.csv --pipeline haralick --out m.json " + small).exit_code == 0);
  REQUIRE(run(dir, "extract --manifest corpus/manifest.csv --feature nmf14 --out n.csv " + small).exit_code == 0);
  const RunResult r = run(dir, "predict --model m.json --features n.csv --out p.csv");
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("feature kind mismatch") != std::string::npos);
  CHECK(json::parse(r.err).at("error").at("code") == "feature_kind_mismatch");
}

TEST_CASE("train and predict a multilevel model from images and from feature files") {
  const fs::path dir = small_corpus("cli_multilevel");
  const std::string small = kSmall;
  REQUIRE(run(dir, "train --manifest corpus/manifest.csv --pipeline multilevel --out m.json " + small).exit_code == 0);
  const json model = json::parse(testutil::read_file(dir / "m.json"));
  CHECK(model.at("type") == "pipeline");
  CHECK(model.contains("nmf"));

  REQUIRE(run(dir, "predict --model m.json --manifest corpus/manifest.csv --out p.csv").exit_code == 0);
  const std::string p = testutil::read_file(dir / "p.csv");
  CHECK(count_lines(p) == 9);
  CHECK(p.rfind("id,predicted,score_a,score_b,chosen_model\n", 0) == 0);

  // Feature files: Haralick, plus NMF projected onto the trained basis.
  testutil::write_bytes(dir / "basis.json", model.at("nmf").dump());
  REQUIRE(run(dir, "extract --manifest corpus/manifest.csv --out h.csv " + small).exit_code == 0);
  REQUIRE(run(dir, "extract --manifest corpus/manifest.csv --feature nmf14 --basis basis.json --out n.csv " + small)
              .exit_code == 0);
  REQUIRE(run(dir, "predict --model m.json --features h.csv --features-b n.csv --out q.csv").exit_code == 0);
  CHECK(testutil::read_file(dir / "q.csv") == p);
}

TEST_CASE("loocv and tier2 report every sample") {
  const fs::path dir = small_corpus("cli_loocv");
  const std::string small = kSmall;
  for (const char* pipeline : {"haralick", "nmf", "concatenated", "multilevel"}) {
    INFO(pipeline);
    const RunResult r =
        run(dir, std::string("loocv --manifest corpus/manifest.csv --pipeline ") + pipeline + " --out r.json " + small);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("SN ") != std::string::npos);
    const json report = json::parse(testutil::read_file(dir / "r.json"));
    CHECK(report.at("per_sample").size() == 8);
    CHECK(report.at("pipeline") == pipeline);
  }
  REQUIRE(run(dir, "tier2 --manifest corpus/manifest.csv --out t2.json " + small).exit_code == 0);
  CHECK(json::parse(testutil::read_file(dir / "t2.json")).at("per_sample").size() == 8);
}

TEST_CASE("tier2 needs lesion masks") {
  const fs::path dir = small_corpus("cli_tier2_nomask");
  std::string manifest = testutil::read_file(dir / "corpus/manifest.csv");
  std::string stripped;
  for (std::size_t start = 0; start < manifest.size();) {
    const auto end = manifest.find('\n', start);
    std::string line = manifest.substr(start, end - start);
    const auto m = line.find(",masks/");
    if (m != std::string::npos) line.erase(m + 1, line.find(',', m + 1) - m - 1);
    stripped += line + '\n';
    start = end + 1;
  }
  testutil::write_bytes(dir / "corpus/manifest.csv", stripped);
  const RunResult r = run(dir, "tier2 --manifest corpus/manifest.csv --out t2.json --resize 32x32");
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("lesion") != std::string::npos);
}

TEST_CASE("tier1 writes a network and a report") {
  const fs::path dir = small_corpus("cli_tier1");
  REQUIRE(run(dir, "tier1 --risk corpus/risk.csv --out t1.json").exit_code == 0);
  CHECK(json::parse(testutil::read_file(dir / "t1.json")).at("pipeline") == "tier1");
  CHECK(json::parse(testutil::read_file(dir / "t1.model.json")).at("type") == "ann");
}

TEST_CASE("bad usage yields exit code 2 and an error document") {
  const fs::path dir = testutil::scratch_dir("cli_usage");
  RunResult r = run(dir, "loocv --C notanumber");
  CHECK(r.exit_code == 2);
  CHECK(json::parse(r.err).at("error").at("code") == "usage");
  r = run(dir, "");
  CHECK(r.exit_code == 2);
  r = run(dir, "loocv --manifest nothing.csv --out r.json --kernel rbf --rbf-sigma -1");
  CHECK(r.exit_code == 1);
  CHECK(json::parse(r.err).at("error").at("code") == "invalid_argument");
  r = run(dir, "loocv --manifest nothing.csv --out r.json --kernel mlp --mlp-params 3");
  CHECK(r.exit_code == 1);
  r = run(dir, "loocv --manifest nothing.csv");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("--out") != std::string::npos);
}
