#pragma once

#include "npplab/attack.hpp"
#include "npplab/models.hpp"
#include "npplab/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace npplab {

// Synthetic stand-in for an ERP-style EEG corpus. Every subject mixes
// independent pink-noise sources through its own mixing matrix; class-1 trials
// also carry a damped-sinusoid evoked response projected through a fixed
// spatial pattern.
struct SyntheticSpec {
  std::size_t n_subjects = 8;
  std::size_t trials_per_subject_per_class = 100;
  std::size_t n_channels = 16;
  double fs = 128.0;
  double epoch_seconds = 1.0;
  double evoked_snr = 1.0;           // template peak relative to noise std
  double subject_variability = 0.05;  // mixing-matrix perturbation scale
  std::uint64_t seed = 1;

  void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);
inline Dataset gen_synthetic(const SyntheticSpec& spec) { return gen_synthetic(spec, spec.seed); }

struct Fold {
  std::uint32_t test_subject = 0;
  std::vector<std::uint32_t> train_subjects;
};

struct SplitPlan {
  std::uint32_t poison_subject = 0;
  std::vector<Fold> folds;
};

SplitPlan loso_plan(const Dataset& dataset, std::uint32_t poison_subject);

// Trials of the given subjects, in dataset order.
Dataset select_subjects(const Dataset& dataset, std::span<const std::uint32_t> subjects);

// Per subject, drops random majority-class trials until both classes have the
// minority count.
Dataset undersample(const Dataset& train, Rng& rng);

// Stratified split: round(train_fraction * n_c) trials of each class go to train.
std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double train_fraction, Rng& rng);

// Test-time key; unset fields fall back to the training key.
struct TestKeySpec {
  std::optional<double> amplitude_ratio;
  std::optional<double> period;
  std::optional<double> duty;
  std::optional<double> phase;
  std::optional<bool> random_phase;
  std::optional<double> max_phase_frac;
};

struct PoisonSpec {
  int target_class = 1;
  double amplitude_ratio = 1.0;  // amplitude / mean channel std of the raw pool
  double period = 0.2;
  double duty = 0.1;
  double phase = 0.0;
  double channel_fraction = 1.0;
  bool random_phase = true;
  double max_phase_frac = 0.8;
  // poison_ratio * |undersampled train| trials; when unset, n_poison trials
  // (or the whole pool when n_poison is unset too).
  std::optional<double> poison_ratio = 0.1;
  std::optional<std::size_t> n_poison;
};

struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> dataset_path;
  PreprocessConfig preprocess;
  ModelOptions model;
  TrainOptions train;
  PoisonSpec poison;
  TestKeySpec test_key;
  double train_fraction = 0.8;
  std::size_t repeats = 3;
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct ResultRow {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::uint32_t poison_subject = 0;
  std::uint32_t test_subject = 0;
  std::size_t n_train = 0;   // undersampled clean training trials
  std::size_t n_poison = 0;
  double acc = 0.0;
  double asr = 0.0;
  std::string config_fingerprint;
};

struct Summary {
  std::size_t n = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;  // sample std, 0 when n < 2
  double asr_mean = 0.0;
  double asr_std = 0.0;
};

Summary summarize(std::span<const ResultRow> rows);

struct FoldOutcome {
  double acc = 0.0;
  std::vector<double> asr;  // one per test key
  std::size_t n_train = 0;
  std::size_t n_poison = 0;
  std::vector<std::uint32_t> trained_subjects;  // subject ids seen in training (incl. poison)
  std::vector<std::uint32_t> tested_subjects;
};

// Precomputed per-dataset state shared by every fold of an experiment.
struct PreparedData {
  Dataset raw;
  Dataset clean;  // preprocess(raw), trial for trial
};

PreparedData prepare(Dataset raw, const PreprocessConfig& cfg);

// One train/evaluate cycle:
// undersample -> forge poison -> merge -> preprocess -> split -> fit -> ACC, ASR.
FoldOutcome run_fold(const PreparedData& data, const SplitPlan& plan, std::size_t fold_index,
                     const ExperimentConfig& config, std::uint64_t fold_seed,
                     std::span<const TestKeySpec> test_keys);

ResultRow run_single(const PreparedData& data, const SplitPlan& plan, std::size_t fold_index,
                     const ExperimentConfig& config, std::uint64_t fold_seed);

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (repeat, fold)
  Summary summary;
};

// Seed of fold f in repeat r: derive_seed(master_seed, r, f). The poison subject
// of repeat r is drawn from Rng(derive_seed(master_seed, r)).
std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t repeat, std::size_t fold);
std::uint32_t draw_poison_subject(const Dataset& dataset, std::uint64_t master_seed, std::size_t repeat);

Dataset load_experiment_dataset(const ExperimentConfig& config);

// threads == 0 uses the hardware concurrency.
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = 0);
ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data, std::size_t threads = 0);

// Rows per test key, each sorted by (repeat, fold).
std::vector<std::vector<ResultRow>> run_experiment_multi(const ExperimentConfig& config, const PreparedData& data,
                                                         std::span<const TestKeySpec> test_keys,
                                                         std::size_t threads = 0);

enum class SweepAxis { poison_ratio, amplitude_ratio, period_duty, channel_fraction };
// matched: train and test use the value; test_only: training key from the
// config, test key varies; cross: every (train, test) pair.
enum class SweepMode { matched, test_only, cross };

const char* to_string(SweepAxis axis);
const char* to_string(SweepMode mode);
SweepAxis sweep_axis_from_string(const std::string& s);
SweepMode sweep_mode_from_string(const std::string& s);

struct SweepSpec {
  SweepAxis axis = SweepAxis::poison_ratio;
  SweepMode mode = SweepMode::matched;
  // One entry per value: {x} for scalar axes, {period, duty} for period_duty.
  std::vector<std::vector<double>> values;

  void validate() const;
};

struct SweepCell {
  std::vector<double> train_value;  // empty for test_only
  std::vector<double> test_value;
  Summary summary;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::poison_ratio;
  SweepMode mode = SweepMode::matched;
  std::vector<SweepCell> cells;
};

SweepTable run_sweep(const ExperimentConfig& config, const SweepSpec& sweep, std::size_t threads = 0);
SweepTable run_sweep(const ExperimentConfig& config, const PreparedData& data, const SweepSpec& sweep,
                     std::size_t threads = 0);

}  // namespace npplab
