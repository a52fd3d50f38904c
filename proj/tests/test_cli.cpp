#include "doctest.h"

#include "npplab/cli.hpp"
#include "npplab/dataset_io.hpp"
#include "npplab/report.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace npplab;
using namespace npplab::test;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "npplab");
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool has(const std::string& text, const std::string& what) { return text.find(what) != std::string::npos; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A quick config: 3 small subjects, one repeat.
std::vector<std::string> small_overrides() {
  return {"dataset.synthetic.n_subjects=3", "dataset.synthetic.trials_per_subject_per_class=20",
          "dataset.synthetic.n_channels=6", "repeats=1", "train.max_epochs=50"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("gen then inspect") {
  const auto dir = scratch_dir("cli_gen");
  const std::string path = (dir / "d.eegp").string();
  const Result g = run_cli({"gen", "--spec", fixture_path("default.json").string(), "--out", path});
  REQUIRE(g.code == 0);
  CHECK(has(g.out, "1600 trials"));

  const Result i = run_cli({"inspect", path});
  REQUIRE(i.code == 0);
  CHECK(has(i.out, "subjects: 8"));
  CHECK(has(i.out, "channels: 16"));
  CHECK(has(i.out, "samples: 128"));
  CHECK(has(i.out, "fs: 128 Hz"));
  CHECK(has(i.out, "classes: 2 (nontarget, target)"));
  CHECK(has(i.out, "subject 7: class0=100 class1=100"));
}

TEST_CASE("gen honours overrides and --seed") {
  const auto dir = scratch_dir("cli_gen_seed");
  const std::string spec = fixture_path("default.json").string();
  auto gen = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"gen", "--spec", spec, "--out", (dir / name).string(), "n_subjects=2",
                                  "trials_per_subject_per_class=5"};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(run_cli(args).code == 0);
    return slurp(dir / name);
  };
  const std::string a = gen("a.eegp", {});
  const std::string b = gen("b.eegp", {});
  const std::string c = gen("c.eegp", {"--seed", "2"});
  const std::string d = gen("d.eegp", {"seed=2"});
  CHECK(a == b);
  CHECK(a != c);
  CHECK(c == d);
  CHECK(load_dataset(dir / "a.eegp").size() == 20);
}

TEST_CASE("run is reproducible") {
  const auto dir = scratch_dir("cli_run");
  const std::string cfg = fixture_path("acceptance.json").string();
  const auto args = [&](const std::string& out) {
    return concat({"-q", "run", "--config", cfg, "--out", (dir / out).string()}, small_overrides());
  };
  const Result a = run_cli(args("a.csv"));
  REQUIRE(a.code == 0);
  CHECK(has(a.out, "runs 2  ACC "));
  CHECK(has(a.out, "ASR "));
  REQUIRE(run_cli(args("b.csv")).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(parse_report_csv(slurp(dir / "a.csv")).size() == 2);

  REQUIRE(run_cli(concat(args("c.csv"), {"--threads", "2"})).code == 0);
  CHECK(slurp(dir / "c.csv") == slurp(dir / "a.csv"));

  REQUIRE(run_cli(args("a.json")).code == 0);
  CHECK(has(slurp(dir / "a.json"), "\"asr\""));
}

TEST_CASE("run: --seed and overrides take precedence over the file") {
  const auto dir = scratch_dir("cli_seed");
  const std::string cfg = fixture_path("acceptance.json").string();
  const auto out = [&](const std::string& name) { return (dir / name).string(); };
  REQUIRE(run_cli(concat({"-q", "run", "--config", cfg, "--out", out("a.csv")}, small_overrides())).code == 0);
  REQUIRE(run_cli(concat({"-q", "run", "--config", cfg, "--out", out("b.csv"), "--seed", "11"}, small_overrides()))
              .code == 0);
  REQUIRE(run_cli(concat({"-q", "run", "--config", cfg, "--out", out("c.csv"), "master_seed=11"}, small_overrides()))
              .code == 0);
  const auto a = parse_report_csv(slurp(dir / "a.csv"));
  const auto b = parse_report_csv(slurp(dir / "b.csv"));
  const auto c = parse_report_csv(slurp(dir / "c.csv"));
  // The fingerprint covers the seed, so it tracks which one was used.
  CHECK(a[0].config_fingerprint != b[0].config_fingerprint);
  CHECK(b[0].config_fingerprint == c[0].config_fingerprint);
  CHECK(slurp(dir / "b.csv") == slurp(dir / "c.csv"));
}

TEST_CASE("NPPLAB_THREADS") {
  const auto dir = scratch_dir("cli_env");
  const std::string cfg = fixture_path("acceptance.json").string();
  const auto args = concat({"-q", "run", "--config", cfg, "--out", (dir / "a.csv").string()}, small_overrides());
  ::setenv("NPPLAB_THREADS", "3", 1);
  CHECK(run_cli(args).code == 0);
  ::setenv("NPPLAB_THREADS", "lots", 1);
  const Result r = run_cli(args);
  CHECK(r.code == 1);
  CHECK(has(r.err, "NPPLAB_THREADS"));
  ::unsetenv("NPPLAB_THREADS");
}

TEST_CASE("sweep from the command line") {
  const auto dir = scratch_dir("cli_sweep");
  const std::string cfg = fixture_path("acceptance.json").string();
  const auto base = concat({"-q", "sweep", "--config", cfg, "--out", (dir / "s.csv").string()}, small_overrides());

  // No sweep section.
  CHECK(run_cli(base).code == 1);

  const Result r = run_cli(concat(base, {"sweep.axis=amplitude_ratio", "sweep.mode=test_only", "sweep.values=[0.5,1.0]"}));
  REQUIRE(r.code == 0);
  CHECK(has(r.out, "2 cells"));
  CHECK(has(slurp(dir / "s.csv"), "amplitude_ratio,test_only"));
}

TEST_CASE("configuration errors exit with 1") {
  const auto dir = scratch_dir("cli_errors");
  const std::string cfg = fixture_path("acceptance.json").string();

  Result r = run_cli({"run", "--config", (dir / "missing.json").string(), "--out", (dir / "x.csv").string()});
  CHECK(r.code == 1);
  CHECK(has(r.err, "missing.json"));

  r = run_cli({"run", "--config", cfg, "--out", (dir / "x.csv").string(), "--frobnicate"});
  CHECK(r.code == 1);
  CHECK(has(r.err, "Usage"));

  r = run_cli({});
  CHECK(r.code == 1);

  r = run_cli({"run", "--config", cfg, "--out", (dir / "x.csv").string(), "poison.amplitud_ratio=2"});
  CHECK(r.code == 1);
  CHECK(has(r.err, "poison.amplitud_ratio"));

  r = run_cli({"run", "--config", cfg, "--out", (dir / "x.txt").string(), "repeats=1"});
  CHECK(r.code == 1);

  r = run_cli({"inspect", (dir / "none.eegp").string()});
  CHECK(r.code == 1);
  CHECK(has(r.err, "none.eegp"));
}

TEST_CASE("runtime errors exit with 2") {
  const auto dir = scratch_dir("cli_runtime");
  const std::string path = (dir / "d.eegp").string();
  REQUIRE(run_cli({"gen", "--spec", fixture_path("default.json").string(), "--out", path, "n_subjects=2",
                   "trials_per_subject_per_class=3"})
              .code == 0);
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(0);
  f.write("XXXX", 4);
  f.close();
  const Result r = run_cli({"inspect", path});
  CHECK(r.code == 2);
  CHECK(has(r.err, "offset 0"));
}

TEST_CASE("help") {
  const Result r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(has(r.out, "inspect"));
}
