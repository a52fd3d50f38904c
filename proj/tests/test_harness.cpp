#include "doctest.h"

#include "npplab/errors.hpp"
#include "npplab/harness.hpp"
#include "npplab/report.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

using namespace npplab;
using namespace npplab::test;

namespace {

ExperimentConfig tiny_config(std::size_t subjects = 4, std::size_t per_class = 20) {
  ExperimentConfig c;
  SyntheticSpec s;
  s.n_subjects = subjects;
  s.trials_per_subject_per_class = per_class;
  s.n_channels = 8;
  c.synthetic = s;
  c.preprocess.band_low = 4.0;
  c.repeats = 1;
  c.master_seed = 3;
  c.train.max_epochs = 100;
  c.train.patience = 20;
  return c;
}

Dataset labelled(const std::vector<std::pair<std::uint32_t, int>>& spec) {
  Dataset d;
  d.channel_names = {"a", "b"};
  d.class_names = {"x", "y"};
  Rng rng(1);
  for (auto [subject, label] : spec) d.trials.push_back(noise_trial(2, 8, 128.0, rng, 1.0, label, subject));
  return d;
}

std::map<std::pair<std::uint32_t, int>, std::size_t> counts(const Dataset& d) {
  std::map<std::pair<std::uint32_t, int>, std::size_t> m;
  for (const Trial& t : d.trials) ++m[{t.subject, t.label}];
  return m;
}

}  // namespace

TEST_CASE("gen_synthetic shape and determinism") {
  SyntheticSpec s;
  s.n_subjects = 3;
  s.trials_per_subject_per_class = 10;
  const Dataset a = gen_synthetic(s);
  const Dataset b = gen_synthetic(s);
  CHECK(a.size() == 60);
  CHECK(a.n_channels() == 16);
  CHECK(a.n_samples() == 128);
  CHECK(a.fs() == 128.0);
  CHECK(a.subjects() == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(a.class_names.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(bit_equal(a.trials[i].data, b.trials[i].data));
    CHECK(a.trials[i].label == b.trials[i].label);
  }
  CHECK_FALSE(bit_equal(gen_synthetic(s, 2).trials[0].data, a.trials[0].data));
  CHECK_NOTHROW(a.validate());
  for (auto [key, n] : counts(a)) CHECK(n == 10);
}

TEST_CASE("gen_synthetic validation") {
  SyntheticSpec s;
  s.n_channels = 0;
  CHECK_THROWS_AS(gen_synthetic(s), ConfigError);
  s = SyntheticSpec{};
  s.evoked_snr = -1.0;
  CHECK_THROWS_AS(gen_synthetic(s), ConfigError);
  s = SyntheticSpec{};
  s.fs = 0.0;
  CHECK_THROWS_AS(gen_synthetic(s), ConfigError);
}

TEST_CASE("without an evoked response the classes cannot be told apart") {
  ExperimentConfig c = tiny_config(5, 40);
  c.synthetic->evoked_snr = 0.0;
  c.poison.poison_ratio = 0.0;
  const ExperimentResult r = run_experiment(c);
  CHECK(std::abs(r.summary.acc_mean - 0.5) <= 0.1);
}

TEST_CASE("loso_plan") {
  SyntheticSpec s;
  s.n_subjects = 8;
  s.trials_per_subject_per_class = 1;
  const Dataset d8 = gen_synthetic(s);
  const SplitPlan p = loso_plan(d8, 5);
  CHECK(p.poison_subject == 5);
  CHECK(p.folds.size() == 7);
  std::set<std::uint32_t> tested;
  for (const Fold& f : p.folds) {
    CHECK(f.train_subjects.size() == 6);
    CHECK(f.test_subject != 5);
    CHECK(std::find(f.train_subjects.begin(), f.train_subjects.end(), 5u) == f.train_subjects.end());
    CHECK(std::find(f.train_subjects.begin(), f.train_subjects.end(), f.test_subject) == f.train_subjects.end());
    tested.insert(f.test_subject);
  }
  CHECK(tested.size() == 7);

  s.n_subjects = 16;
  const SplitPlan p16 = loso_plan(gen_synthetic(s), 0);
  CHECK(p16.folds.size() == 15);
  for (const Fold& f : p16.folds) CHECK(f.train_subjects.size() == 14);

  CHECK_THROWS_AS(loso_plan(d8, 99), ConfigError);
  s.n_subjects = 2;
  CHECK_THROWS_AS(loso_plan(gen_synthetic(s), 0), ConfigError);
}

TEST_CASE("undersample") {
  Rng rng(1);
  std::vector<std::pair<std::uint32_t, int>> spec;
  for (int i = 0; i < 30; ++i) spec.push_back({0, 0});
  for (int i = 0; i < 10; ++i) spec.push_back({0, 1});
  for (int i = 0; i < 5; ++i) spec.push_back({1, 0}), spec.push_back({1, 1});
  const Dataset d = labelled(spec);
  const Dataset u = undersample(d, rng);
  auto c = counts(u);
  CHECK(c[{0, 0}] == 10);
  CHECK(c[{0, 1}] == 10);
  CHECK(c[{1, 0}] == 5);
  CHECK(c[{1, 1}] == 5);

  Rng r1(5), r2(5);
  const Dataset a = undersample(d, r1), b = undersample(d, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(bit_equal(a.trials[i].data, b.trials[i].data));

  // A single-class subject drops out without an error.
  std::vector<std::pair<std::uint32_t, int>> lop = spec;
  for (int i = 0; i < 4; ++i) lop.push_back({2, 1});
  const Dataset v = undersample(labelled(lop), rng);
  CHECK(counts(v)[{2, 1}] == 0);
  CHECK(v.size() == 30);
}

TEST_CASE("split_train_val") {
  Rng rng(2);
  std::vector<std::pair<std::uint32_t, int>> spec;
  for (int i = 0; i < 100; ++i) spec.push_back({0, i % 2});
  const Dataset d = labelled(spec);
  auto [train, val] = split_train_val(d, 0.8, rng);
  CHECK(train.size() == 80);
  CHECK(val.size() == 20);
  CHECK(counts(train)[{0, 0}] == 40);
  CHECK(counts(val)[{0, 1}] == 10);

  // Disjoint and covering.
  std::size_t found = 0;
  for (const Trial& t : d.trials) {
    std::size_t n = 0;
    for (const Trial& x : train.trials) n += bit_equal(x.data, t.data);
    for (const Trial& x : val.trials) n += bit_equal(x.data, t.data);
    found += n == 1;
  }
  CHECK(found == 100);

  // Uneven classes keep their ratio within one trial.
  std::vector<std::pair<std::uint32_t, int>> uneven;
  for (int i = 0; i < 37; ++i) uneven.push_back({0, 0});
  for (int i = 0; i < 13; ++i) uneven.push_back({0, 1});
  auto [t2, v2] = split_train_val(labelled(uneven), 0.8, rng);
  CHECK(std::abs(static_cast<double>(t2.size()) - 40.0) <= 1.0);
  CHECK(std::abs(static_cast<double>(counts(t2)[{0, 0}]) - 0.8 * 37) <= 1.0);
  CHECK(std::abs(static_cast<double>(counts(t2)[{0, 1}]) - 0.8 * 13) <= 1.0);

  CHECK_THROWS_AS(split_train_val(labelled({{0, 0}, {0, 1}, {0, 1}}), 0.8, rng), ConfigError);
  CHECK_THROWS_AS(split_train_val(d, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(split_train_val(d, 0.0, rng), ConfigError);
}

TEST_CASE("run_single is deterministic and isolated") {
  const ExperimentConfig c = tiny_config();
  const PreparedData data = prepare(load_experiment_dataset(c), c.preprocess);
  const SplitPlan plan = loso_plan(data.raw, 1);
  const std::uint64_t seed = fold_seed(c.master_seed, 0, 0);
  const ResultRow a = run_single(data, plan, 0, c, seed);
  const ResultRow b = run_single(data, plan, 0, c, seed);
  CHECK(a.acc == b.acc);
  CHECK(a.asr == b.asr);
  CHECK(a.n_poison == b.n_poison);
  CHECK(a.config_fingerprint == b.config_fingerprint);
  CHECK(a.poison_subject == 1);
  CHECK(a.n_poison == static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(a.n_train))));

  const TestKeySpec key;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const FoldOutcome o = run_fold(data, plan, f, c, fold_seed(c.master_seed, 0, f), std::span(&key, 1));
    CHECK(o.tested_subjects == std::vector<std::uint32_t>{plan.folds[f].test_subject});
    CHECK(std::find(o.trained_subjects.begin(), o.trained_subjects.end(), plan.folds[f].test_subject) ==
          o.trained_subjects.end());
    // The poison subject only reaches training through the forged trials.
    CHECK(std::find(o.trained_subjects.begin(), o.trained_subjects.end(), plan.poison_subject) !=
          o.trained_subjects.end());
  }
}

TEST_CASE("zero poisoning reduces to the clean baseline") {
  ExperimentConfig c = tiny_config();
  c.poison.poison_ratio = 0.0;
  const PreparedData data = prepare(load_experiment_dataset(c), c.preprocess);
  const SplitPlan plan = loso_plan(data.raw, 0);
  TestKeySpec full, zero;
  full.amplitude_ratio = 1.0;
  zero.amplitude_ratio = 0.0;
  const std::vector<TestKeySpec> keys{full, zero};
  const FoldOutcome o = run_fold(data, plan, 0, c, 11, keys);
  CHECK(o.n_poison == 0);
  CHECK(std::find(o.trained_subjects.begin(), o.trained_subjects.end(), 0u) == o.trained_subjects.end());

  // Same seed with the key also removed from training: identical numbers.
  ExperimentConfig silent = c;
  silent.poison.amplitude_ratio = 0.0;
  const FoldOutcome s = run_fold(data, plan, 0, silent, 11, keys);
  CHECK(s.acc == o.acc);
  CHECK(s.asr == o.asr);
}

TEST_CASE("run_experiment row counts and summary") {
  ExperimentConfig c = tiny_config(8, 6);
  c.repeats = 10;
  c.train.max_epochs = 30;
  c.train.patience = 5;
  const ExperimentResult r = run_experiment(c);
  CHECK(r.rows.size() == 70);
  double acc = 0.0, asr = 0.0;
  for (const ResultRow& row : r.rows) acc += row.acc, asr += row.asr;
  CHECK(std::abs(r.summary.acc_mean - acc / 70.0) <= 1e-12);
  CHECK(std::abs(r.summary.asr_mean - asr / 70.0) <= 1e-12);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto prev = std::pair(r.rows[i - 1].repeat, r.rows[i - 1].fold);
    const auto cur = std::pair(r.rows[i].repeat, r.rows[i].fold);
    CHECK(prev < cur);
  }
  std::set<std::uint32_t> poison_subjects;
  for (const ResultRow& row : r.rows) poison_subjects.insert(row.poison_subject);
  CHECK(poison_subjects.size() > 1);

  ExperimentConfig three = tiny_config(3, 10);
  CHECK(run_experiment(three).rows.size() == 2);
}

TEST_CASE("summary statistics") {
  std::vector<ResultRow> rows(3);
  rows[0].acc = 0.5, rows[1].acc = 0.7, rows[2].acc = 0.9;
  rows[0].asr = 1.0, rows[1].asr = 1.0, rows[2].asr = 1.0;
  const Summary s = summarize(rows);
  CHECK(s.n == 3);
  CHECK(s.acc_mean == doctest::Approx(0.7));
  CHECK(s.acc_std == doctest::Approx(0.2));
  CHECK(s.asr_std == 0.0);
  CHECK(summarize(std::span(rows.data(), 1)).acc_std == 0.0);
}

TEST_CASE("thread count does not change the report") {
  ExperimentConfig c = tiny_config(5, 12);
  c.repeats = 2;
  const std::string serial = format_report(run_experiment(c, 1).rows, ReportFormat::csv);
  const std::string parallel = format_report(run_experiment(c, 4).rows, ReportFormat::csv);
  CHECK(serial == parallel);
}

TEST_CASE("fold failures name the fold") {
  ExperimentConfig c = tiny_config(3, 10);
  c.poison.poison_ratio.reset();
  c.poison.n_poison = 1000;
  try {
    run_experiment(c, 1);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("repeat 0") != std::string::npos);
    CHECK(what.find("fold") != std::string::npos);
  }
}

TEST_CASE("poison count comes from the whole pool when no ratio is set") {
  ExperimentConfig c = tiny_config(3, 10);
  c.poison.poison_ratio.reset();
  const ExperimentResult r = run_experiment(c, 1);
  for (const ResultRow& row : r.rows) CHECK(row.n_poison == 20);
}

TEST_CASE("experiment config validation") {
  ExperimentConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.repeats = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.poison.poison_ratio = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.synthetic.reset();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("sweep sizes") {
  ExperimentConfig c = tiny_config(3, 8);
  c.train.max_epochs = 20;
  c.train.patience = 5;
  const PreparedData data = prepare(load_experiment_dataset(c), c.preprocess);

  SweepSpec ratios;
  ratios.axis = SweepAxis::poison_ratio;
  for (int i = 1; i <= 10; ++i) ratios.values.push_back({0.01 * i});
  const SweepTable t1 = run_sweep(c, data, ratios);
  CHECK(t1.cells.size() == 10);
  for (const SweepCell& cell : t1.cells) CHECK(cell.summary.n == 2);

  SweepSpec grid;
  grid.axis = SweepAxis::period_duty;
  grid.mode = SweepMode::cross;
  for (double T : {0.1, 0.2, 1.0})
    for (double d : {0.15, 0.1, 0.05}) grid.values.push_back({T, d});
  const SweepTable t2 = run_sweep(c, data, grid);
  CHECK(t2.cells.size() == 81);
  CHECK(t2.cells[1].train_value == std::vector<double>{0.1, 0.15});
  CHECK(t2.cells[1].test_value == std::vector<double>{0.1, 0.1});

  SweepSpec channels;
  channels.axis = SweepAxis::channel_fraction;
  channels.values = {{1.0}, {0.3}, {0.2}, {0.1}};
  CHECK(run_sweep(c, data, channels).cells.size() == 4);

  SweepSpec amps;
  amps.axis = SweepAxis::amplitude_ratio;
  amps.mode = SweepMode::test_only;
  amps.values = {{0.25}, {0.5}};
  const SweepTable t4 = run_sweep(c, data, amps);
  CHECK(t4.cells.size() == 2);
  CHECK(t4.cells[0].train_value.empty());
  // Only the test key moves, so clean accuracy is shared.
  CHECK(t4.cells[0].summary.acc_mean == t4.cells[1].summary.acc_mean);
}

TEST_CASE("sweep validation") {
  SweepSpec s;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.values = {{0.1}};
  s.mode = SweepMode::test_only;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.axis = SweepAxis::period_duty;
  s.mode = SweepMode::matched;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.values = {{0.2, 0.1}};
  CHECK_NOTHROW(s.validate());
}
