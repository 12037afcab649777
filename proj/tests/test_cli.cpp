#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "physmass/cli.hpp"
#include "physmass/metrics.hpp"
#include "physmass/reports.hpp"
#include "support/tempdir.hpp"

using namespace physmass;
using physmass::testing::slurp;
using physmass::testing::TempDir;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "physmass");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// Small enough that every subcommand finishes in well under a second.
const std::vector<std::string> kSmall = {"--set", "train_count=16", "--set", "test_count=8",
                                         "--set", "resolution=32",  "--set", "footprint=0.0165",
                                         "--set", "num_points=16",  "--set", "feature_dim=8",
                                         "--set", "head_hidden=8",  "--set", "image_hidden=8",
                                         "--set", "point_hidden=8", "--set", "epochs=1"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"gen", "--bogus", "--out", "x"}).code == 2);
  CHECK(cli({"gen"}).code == 2);
  CHECK(cli({"gen", "--out", "/tmp/x", "--config", "/nonexistent.cfg"}).code == 2);
  CHECK(cli({"eval", "--checkpoint", "/nonexistent.bin", "--out", "/tmp/x"}).code == 2);
  CHECK(cli({"baseline", "--kind", "oracle", "--out", "/tmp/x"}).code == 2);
  const auto unknown_key = cli({"gen", "--out", "/tmp/x", "--set", "nonsense=1"});
  CHECK(unknown_key.code == 2);
  CHECK(unknown_key.err.find("nonsense") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("the installed binary reports failures through its exit status") {
  const std::string bin = PHYSMASS_CLI_PATH;
  const int bad = std::system((bin + " gen --nope > /dev/null 2>&1").c_str());
  CHECK(WIFEXITED(bad));
  CHECK(WEXITSTATUS(bad) == 2);
  TempDir dir("cli_bin");
  const int missing = std::system((bin + " train --data " + dir.str("absent") + " --out " + dir.str("run") +
                                   " > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(missing) != 0);
}

TEST_CASE("gen is deterministic in the seed") {
  TempDir dir("cli_gen");
  REQUIRE(cli(with_small({"gen", "--seed", "3", "--out", dir.str("a")})).code == 0);
  REQUIRE(cli(with_small({"gen", "--seed", "3", "--out", dir.str("b")})).code == 0);
  REQUIRE(cli(with_small({"gen", "--seed", "4", "--out", dir.str("c")})).code == 0);
  const auto a = slurp(dir.path() / "a" / "manifest.tsv");
  CHECK_FALSE(a.empty());
  CHECK(count_lines(a) == 1 + 24);
  CHECK(a == slurp(dir.path() / "b" / "manifest.tsv"));
  CHECK(a != slurp(dir.path() / "c" / "manifest.tsv"));
  CHECK(slurp(dir.path() / "a" / "categories.tsv") == slurp(dir.path() / "b" / "categories.tsv"));
}

TEST_CASE("config files and overrides") {
  TempDir dir("cli_cfg");
  {
    std::ofstream cfg(dir.path() / "run.cfg");
    cfg << "# small run\ntrain_count = 10\ntest_count = 5\nresolution = 32\nfootprint = 0.0165\n";
  }
  REQUIRE(cli({"gen", "--config", dir.str("run.cfg"), "--set", "test_count=6", "--out", dir.str("d")}).code == 0);
  CHECK(count_lines(slurp(dir.path() / "d" / "manifest.tsv")) == 1 + 16);
  {
    std::ofstream bad(dir.path() / "bad.cfg");
    bad << "train_count 10\n";
  }
  CHECK(cli({"gen", "--config", dir.str("bad.cfg"), "--out", dir.str("e")}).code == 2);
}

TEST_CASE("train, eval and report") {
  TempDir dir("cli_train");
  const auto data = dir.str("data");
  REQUIRE(cli(with_small({"gen", "--seed", "1", "--out", data})).code == 0);

  // An untrained checkpoint is a valid model.
  const auto init = cli(with_small({"train", "--data", data, "--init-only", "--out", dir.str("init")}));
  REQUIRE(init.code == 0);
  const auto ev = cli({"eval", "--checkpoint", dir.str("init/checkpoint.bin"), "--data", data, "--out",
                       dir.str("init_eval")});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("Total") != std::string::npos);
  CHECK(count_lines(slurp(dir.path() / "init_eval" / "predictions.csv")) == 1 + 8);
  const auto all = cli({"eval", "--checkpoint", dir.str("init/checkpoint.bin"), "--data", data, "--split",
                        "all", "--out", dir.str("init_all")});
  CHECK(all.code == 0);
  CHECK(count_lines(slurp(dir.path() / "init_all" / "predictions.csv")) == 1 + 24);
  CHECK(cli({"eval", "--checkpoint", dir.str("init/checkpoint.bin"), "--data", data, "--split", "val",
             "--out", dir.str("x")})
            .code == 2);

  const auto tr = cli(with_small({"train", "--data", data, "--out", dir.str("run")}));
  REQUIRE(tr.code == 0);
  for (const char* f : {"checkpoint.bin", "record.json", "metrics.csv", "metrics.json", "predictions.csv"})
    CHECK(std::filesystem::exists(dir.path() / "run" / f));

  // Evaluating the trained checkpoint reproduces the stored test predictions.
  REQUIRE(cli({"eval", "--checkpoint", dir.str("run/checkpoint.bin"), "--data", data, "--out",
               dir.str("run_eval")})
              .code == 0);
  CHECK(slurp(dir.path() / "run_eval" / "predictions.csv") == slurp(dir.path() / "run" / "predictions.csv"));

  // report recomputes the stored metrics from predictions.csv alone.
  const auto rep = cli({"report", "--run", dir.str("run")});
  REQUIRE(rep.code == 0);
  CHECK(slurp(dir.path() / "run" / "report_metrics.csv") == slurp(dir.path() / "run" / "metrics.csv"));
  std::ifstream preds(dir.path() / "run" / "predictions.csv");
  const auto records = read_predictions_csv(preds);
  CHECK(records.size() == 8);
  CHECK(std::filesystem::exists(dir.path() / "run" / "report.txt"));
  CHECK(cli({"report", "--run", dir.str("data")}).code == 2);
}

TEST_CASE("ablate and baselines") {
  TempDir dir("cli_ablate");
  const auto data = dir.str("data");
  REQUIRE(cli(with_small({"gen", "--seed", "2", "--out", data})).code == 0);

  REQUIRE(cli(with_small({"ablate", "--data", data, "--out", dir.str("abl")})).code == 0);
  const auto csv = slurp(dir.path() / "abl" / "ablation.csv");
  CHECK(count_lines(csv) == 1 + 7);
  CHECK(csv.rfind("image,density,volume,ALDE,APE,MnRE,Q\n", 0) == 0);
  CHECK(slurp(dir.path() / "abl" / "ablation_notes.txt").find("floor") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "abl" / "image+density+volume" / "metrics.csv"));

  REQUIRE(cli(with_small({"baseline", "--kind", "direct", "--data", data, "--out", dir.str("direct")})).code == 0);
  CHECK(std::filesystem::exists(dir.path() / "direct" / "checkpoint.bin"));
  CHECK(cli({"eval", "--checkpoint", dir.str("direct/checkpoint.bin"), "--data", data, "--out",
             dir.str("direct_eval")})
            .code == 0);
  CHECK(slurp(dir.path() / "direct_eval" / "predictions.csv") ==
        slurp(dir.path() / "direct" / "predictions.csv"));

  for (const char* src : {"oracle", "geometry"}) {
    CAPTURE(src);
    const auto out = dir.str(std::string("rule_") + src);
    const auto r = cli(with_small({"baseline", "--kind", "rule", "--volume-source", src, "--data", data, "--out", out}));
    REQUIRE(r.code == 0);
    CHECK(slurp(std::filesystem::path(out) / "excluded.txt").rfind("unknown_material_excluded ", 0) == 0);
    CHECK(std::filesystem::exists(std::filesystem::path(out) / "predictions.csv"));
  }
}

}  // TEST_SUITE
