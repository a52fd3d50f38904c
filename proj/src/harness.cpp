#include "npplab/harness.hpp"

#include "npplab/config.hpp"
#include "npplab/dataset_io.hpp"
#include "npplab/errors.hpp"
#include "npplab/log.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

namespace npplab {
namespace {

// Seed stream tags inside one fold.
enum : std::uint64_t {
  kUndersampleStream = 1,
  kForgeStream = 2,
  kMergeStream = 3,
  kSplitStream = 4,
  kTrainStream = 5,
  kEvalStream = 100,
};

// Kellet's three-pole pink filter: three AR(1) branches plus a white term.
constexpr std::array<double, 3> kPinkPoles{0.99765, 0.96300, 0.57000};
constexpr std::array<double, 3> kPinkGains{0.0990460, 0.2965164, 1.0526913};
constexpr double kPinkWhite = 0.1848;

double pink_variance() {
  double v = kPinkWhite * kPinkWhite;
  for (std::size_t j = 0; j < 3; ++j) {
    v += 2.0 * kPinkWhite * kPinkGains[j];
    for (std::size_t k = 0; k < 3; ++k) v += kPinkGains[j] * kPinkGains[k] / (1.0 - kPinkPoles[j] * kPinkPoles[k]);
  }
  return v;
}

// Unit-variance pink noise; branch states start from their stationary joint
// distribution (approximated by independent draws, then a short burn-in).
std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::array<double, 3> state{};
  for (std::size_t j = 0; j < 3; ++j) {
    state[j] = rng.normal() * kPinkGains[j] / std::sqrt(1.0 - kPinkPoles[j] * kPinkPoles[j]);
  }
  const double norm = 1.0 / std::sqrt(pink_variance());
  constexpr std::size_t kBurnIn = 64;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n + kBurnIn; ++i) {
    const double w = rng.normal();
    double v = kPinkWhite * w;
    for (std::size_t j = 0; j < 3; ++j) {
      state[j] = kPinkPoles[j] * state[j] + kPinkGains[j] * w;
      v += state[j];
    }
    if (i >= kBurnIn) out[i - kBurnIn] = v * norm;
  }
  return out;
}

Eigen::MatrixXd random_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Rows scaled to unit norm so every channel has unit noise variance.
void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
}

double evoked_template(double t) {
  constexpr double kOnset = 0.2;  // s
  constexpr double kDecay = 0.3;  // s
  constexpr double kFreq = 4.0;   // Hz
  if (t < kOnset) return 0.0;
  const double omega = 2.0 * std::numbers::pi * kFreq;
  // Normalized to a unit peak, reached at u = atan(omega * decay) / omega.
  const double u_peak = std::atan(omega * kDecay) / omega;
  const double peak = std::exp(-u_peak / kDecay) * std::sin(omega * u_peak);
  const double u = t - kOnset;
  return std::exp(-u / kDecay) * std::sin(omega * u) / peak;
}

std::vector<std::size_t> indices_of_subjects(const Dataset& d, std::span<const std::uint32_t> subjects) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::find(subjects.begin(), subjects.end(), d.trials[i].subject) != subjects.end()) idx.push_back(i);
  }
  return idx;
}

// Per-subject majority-class undersampling over a list of trial indices.
std::vector<std::size_t> undersample_indices(const Dataset& d, const std::vector<std::size_t>& idx, Rng& rng) {
  std::vector<std::uint32_t> subjects;
  for (std::size_t i : idx) {
    const std::uint32_t s = d.trials[i].subject;
    if (std::find(subjects.begin(), subjects.end(), s) == subjects.end()) subjects.push_back(s);
  }
  std::vector<std::size_t> kept;
  for (std::uint32_t s : subjects) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i : idx) {
      const Trial& t = d.trials[i];
      if (t.subject != s) continue;
      if (t.label != 0 && t.label != 1) throw ConfigError("undersampling needs binary labels");
      by_class[static_cast<std::size_t>(t.label)].push_back(i);
    }
    const std::size_t m = std::min(by_class[0].size(), by_class[1].size());
    if (m == 0) {
      log::warn("subject " + std::to_string(s) + " has a single class; it contributes no trials after undersampling");
      continue;
    }
    for (auto& cls : by_class) {
      if (cls.size() == m) {
        kept.insert(kept.end(), cls.begin(), cls.end());
        continue;
      }
      for (std::size_t k : rng.sample_without_replacement(cls.size(), m)) kept.push_back(cls[k]);
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out = d.empty_like();
  out.trials.reserve(idx.size());
  for (std::size_t i : idx) out.trials.push_back(d.trials[i]);
  return out;
}

void validate_key_fields(double period, double duty, double phase, double max_phase_frac, const char* where) {
  const std::string w = where;
  if (!(period > 0.0)) throw ConfigError(w + ".period_T must be > 0");
  if (!(duty >= 0.0 && duty <= 1.0)) throw ConfigError(w + ".duty_d must lie in [0, 1]");
  if (!(phase >= 0.0 && phase < period)) throw ConfigError(w + ".phase_phi must lie in [0, period_T)");
  if (!(max_phase_frac >= 0.0 && max_phase_frac <= 1.0)) throw ConfigError(w + ".max_phase_frac must lie in [0, 1]");
}

PoisonConfig training_key(const ExperimentConfig& config, double mean_std) {
  const PoisonSpec& p = config.poison;
  PoisonConfig pc;
  pc.target_class = p.target_class;
  pc.npp.period = p.period;
  pc.npp.duty = p.duty;
  pc.npp.phase = p.phase;
  pc.npp.amplitude = amplitude_for_ratio(mean_std, p.amplitude_ratio);
  pc.channel_fraction = p.channel_fraction;
  pc.random_phase = p.random_phase;
  pc.max_phase_frac = p.max_phase_frac;
  return pc;
}

PoisonConfig test_key(const ExperimentConfig& config, const TestKeySpec& k, double mean_std) {
  PoisonConfig pc = training_key(config, mean_std);
  if (k.amplitude_ratio) pc.npp.amplitude = amplitude_for_ratio(mean_std, *k.amplitude_ratio);
  if (k.period) pc.npp.period = *k.period;
  if (k.duty) pc.npp.duty = *k.duty;
  if (k.phase) pc.npp.phase = *k.phase;
  if (k.random_phase) pc.random_phase = *k.random_phase;
  if (k.max_phase_frac) pc.max_phase_frac = *k.max_phase_frac;
  return pc;
}

TestKeySpec overlay(TestKeySpec base, const TestKeySpec& top) {
  if (top.amplitude_ratio) base.amplitude_ratio = top.amplitude_ratio;
  if (top.period) base.period = top.period;
  if (top.duty) base.duty = top.duty;
  if (top.phase) base.phase = top.phase;
  if (top.random_phase) base.random_phase = top.random_phase;
  if (top.max_phase_frac) base.max_phase_frac = top.max_phase_frac;
  return base;
}

std::size_t resolve_threads(std::size_t threads) {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_subjects < 1 || trials_per_subject_per_class < 1 || n_channels < 1) {
    throw ConfigError("synthetic counts must be >= 1");
  }
  if (!(fs > 0.0)) throw ConfigError("synthetic fs must be > 0");
  if (!(epoch_seconds > 0.0) || std::llround(fs * epoch_seconds) < 1) {
    throw ConfigError("synthetic epoch must contain at least one sample");
  }
  if (!(evoked_snr >= 0.0)) throw ConfigError("evoked_snr must be >= 0");
  if (!(subject_variability >= 0.0)) throw ConfigError("subject_variability must be >= 0");
}

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto c = static_cast<Eigen::Index>(spec.n_channels);
  const auto s = static_cast<Eigen::Index>(std::llround(spec.fs * spec.epoch_seconds));

  Rng base_rng(derive_seed(seed, 0));
  const Eigen::MatrixXd base_mixing = Eigen::MatrixXd::Identity(c, c) + 0.5 * random_gaussian(c, c, base_rng);
  Eigen::VectorXd pattern = random_gaussian(c, 1, base_rng).col(0);
  pattern /= pattern.cwiseAbs().maxCoeff();

  Eigen::RowVectorXd wave(s);
  for (Eigen::Index i = 0; i < s; ++i) wave(i) = evoked_template(static_cast<double>(i) / spec.fs);

  Dataset d;
  d.name = "synthetic";
  for (std::size_t ch = 0; ch < spec.n_channels; ++ch) d.channel_names.push_back("ch" + std::to_string(ch));
  d.class_names = {"nontarget", "target"};
  d.trials.reserve(spec.n_subjects * 2 * spec.trials_per_subject_per_class);

  for (std::size_t subj = 0; subj < spec.n_subjects; ++subj) {
    Rng rng(derive_seed(seed, 1, subj));
    Eigen::MatrixXd mixing = base_mixing + spec.subject_variability * random_gaussian(c, c, rng);
    normalize_rows(mixing);

    for (std::size_t k = 0; k < 2 * spec.trials_per_subject_per_class; ++k) {
      // Alternate classes so either class prefix of a subject is balanced.
      const int label = static_cast<int>(k % 2);
      Matrix sources(c, s);
      for (Eigen::Index src = 0; src < c; ++src) {
        const std::vector<double> noise = pink_noise(static_cast<std::size_t>(s), rng);
        sources.row(src) = Eigen::Map<const Eigen::RowVectorXd>(noise.data(), s);
      }
      Trial t;
      t.fs = spec.fs;
      t.label = label;
      t.subject = static_cast<std::uint32_t>(subj);
      t.data = mixing * sources;
      if (label == 1 && spec.evoked_snr > 0.0) {
        const double gain = spec.evoked_snr * (1.0 + 0.2 * rng.normal());
        t.data += gain * pattern * wave;
      }
      // Stored as f32 on disk; keep the in-memory copy identical.
      t.data = t.data.cast<float>().cast<double>();
      d.trials.push_back(std::move(t));
    }
  }
  return d;
}

SplitPlan loso_plan(const Dataset& dataset, std::uint32_t poison_subject) {
  std::vector<std::uint32_t> subjects = dataset.subjects();
  std::sort(subjects.begin(), subjects.end());
  if (subjects.size() < 3) throw ConfigError("leave-one-subject-out with a poison subject needs >= 3 subjects");
  if (std::find(subjects.begin(), subjects.end(), poison_subject) == subjects.end()) {
    throw ConfigError("poison subject " + std::to_string(poison_subject) + " is not in the dataset");
  }
  SplitPlan plan;
  plan.poison_subject = poison_subject;
  for (std::uint32_t test : subjects) {
    if (test == poison_subject) continue;
    Fold f;
    f.test_subject = test;
    for (std::uint32_t other : subjects) {
      if (other != test && other != poison_subject) f.train_subjects.push_back(other);
    }
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

Dataset select_subjects(const Dataset& dataset, std::span<const std::uint32_t> subjects) {
  return subset(dataset, indices_of_subjects(dataset, subjects));
}

Dataset undersample(const Dataset& train, Rng& rng) {
  bool has0 = false;
  bool has1 = false;
  for (const Trial& t : train.trials) {
    has0 |= t.label == 0;
    has1 |= t.label == 1;
  }
  if (!has0 || !has1) throw ConfigError("undersampling needs both classes present");
  std::vector<std::size_t> all(train.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return subset(train, undersample_indices(train, all, rng));
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  int max_label = -1;
  for (const Trial& t : dataset.trials) max_label = std::max(max_label, t.label);
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
  for (int label = 0; label <= max_label; ++label) {
    std::vector<std::size_t> cls;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.trials[i].label == label) cls.push_back(i);
    }
    if (cls.empty()) continue;
    if (cls.size() < 2) {
      throw ConfigError("class " + std::to_string(label) + " has fewer than 2 trials; cannot split train/validation");
    }
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(cls.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, cls.size() - 1);
    rng.shuffle(cls);
    train_idx.insert(train_idx.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_train));
    val_idx.insert(val_idx.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_train), cls.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {subset(dataset, train_idx), subset(dataset, val_idx)};
}

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == dataset_path.has_value()) {
    throw ConfigError("dataset: exactly one of 'synthetic' or 'path' must be given");
  }
  if (synthetic) synthetic->validate();
  preprocess.validate();
  model.validate();
  train.validate();
  const PoisonSpec& p = poison;
  if (p.target_class != 0 && p.target_class != 1) throw ConfigError("poison.target_class must be 0 or 1");
  if (!(p.amplitude_ratio >= 0.0)) throw ConfigError("poison.amplitude_ratio must be >= 0");
  validate_key_fields(p.period, p.duty, p.phase, p.max_phase_frac, "poison");
  if (!(p.channel_fraction > 0.0 && p.channel_fraction <= 1.0)) {
    throw ConfigError("poison.channel_fraction must lie in (0, 1]");
  }
  if (p.poison_ratio && !(*p.poison_ratio >= 0.0 && *p.poison_ratio <= 1.0)) {
    throw ConfigError("poison.poison_ratio must lie in [0, 1]");
  }
  const TestKeySpec& k = test_key;
  if (k.amplitude_ratio && !(*k.amplitude_ratio >= 0.0)) throw ConfigError("test_key.amplitude_ratio must be >= 0");
  validate_key_fields(k.period.value_or(p.period), k.duty.value_or(p.duty), k.phase.value_or(p.phase),
                      k.max_phase_frac.value_or(p.max_phase_frac), "test_key");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
}

Summary summarize(std::span<const ResultRow> rows) {
  Summary s;
  s.n = rows.size();
  if (rows.empty()) return s;
  for (const ResultRow& r : rows) {
    s.acc_mean += r.acc;
    s.asr_mean += r.asr;
  }
  const auto n = static_cast<double>(rows.size());
  s.acc_mean /= n;
  s.asr_mean /= n;
  if (rows.size() > 1) {
    for (const ResultRow& r : rows) {
      s.acc_std += (r.acc - s.acc_mean) * (r.acc - s.acc_mean);
      s.asr_std += (r.asr - s.asr_mean) * (r.asr - s.asr_mean);
    }
    s.acc_std = std::sqrt(s.acc_std / (n - 1.0));
    s.asr_std = std::sqrt(s.asr_std / (n - 1.0));
  }
  return s;
}

PreparedData prepare(Dataset raw, const PreprocessConfig& cfg) {
  raw.validate();
  PreparedData p;
  p.clean = preprocess(raw, cfg);
  p.raw = std::move(raw);
  return p;
}

FoldOutcome run_fold(const PreparedData& data, const SplitPlan& plan, std::size_t fold_index,
                     const ExperimentConfig& config, std::uint64_t fold_seed,
                     std::span<const TestKeySpec> test_keys) {
  if (fold_index >= plan.folds.size()) throw IndexError("fold index out of range");
  const Fold& fold = plan.folds[fold_index];
  const Dataset& raw = data.raw;
  const Dataset& clean = data.clean;

  Rng under_rng(derive_seed(fold_seed, kUndersampleStream));
  const std::vector<std::size_t> train_idx =
      undersample_indices(raw, indices_of_subjects(raw, fold.train_subjects), under_rng);
  if (train_idx.empty()) throw ConfigError("no training trials left after undersampling");

  const std::uint32_t poison_subject = plan.poison_subject;
  const Dataset pool = select_subjects(raw, std::span<const std::uint32_t>(&poison_subject, 1));
  if (pool.empty()) throw ConfigError("poison subject has no trials");
  const double mean_std = channel_std_stats(pool.trials);

  PoisonConfig pc = training_key(config, mean_std);
  if (config.poison.poison_ratio) {
    pc.n_poison = static_cast<std::size_t>(std::llround(*config.poison.poison_ratio * static_cast<double>(train_idx.size())));
  } else {
    pc.n_poison = config.poison.n_poison.value_or(pool.size());
  }
  Rng forge_rng(derive_seed(fold_seed, kForgeStream));
  PoisonSet poison = forge_poison_set(pool, pc, forge_rng);
  for (Trial& t : poison.trials) t = preprocess(t, config.preprocess);

  Rng merge_rng(derive_seed(fold_seed, kMergeStream));
  const Dataset merged = poison_merge(subset(clean, train_idx), poison.trials, merge_rng);

  Rng split_rng(derive_seed(fold_seed, kSplitStream));
  auto [train, val] = split_train_val(merged, config.train_fraction, split_rng);

  TrainOptions opts = config.train;
  opts.seed = derive_seed(fold_seed, kTrainStream, config.train.seed);
  const Pipeline pipeline = fit_pipeline(train, val, config.model, opts);

  const std::uint32_t test_subject = fold.test_subject;
  const std::vector<std::size_t> test_idx = indices_of_subjects(raw, std::span<const std::uint32_t>(&test_subject, 1));
  if (test_idx.empty()) throw ConfigError("test subject has no trials");

  FoldOutcome out;
  out.acc = eval_acc(pipeline, subset(clean, test_idx));
  const Dataset test_raw = subset(raw, test_idx);
  for (std::size_t k = 0; k < test_keys.size(); ++k) {
    const PoisonConfig key = test_key(config, overlay(config.test_key, test_keys[k]), mean_std);
    Rng eval_rng(derive_seed(fold_seed, kEvalStream + k));
    out.asr.push_back(eval_asr(pipeline, test_raw, key, poison.mask, config.preprocess, eval_rng));
  }
  out.n_train = train_idx.size();
  out.n_poison = poison.trials.size();
  out.trained_subjects = merged.subjects();
  out.tested_subjects = test_raw.subjects();
  return out;
}

ResultRow run_single(const PreparedData& data, const SplitPlan& plan, std::size_t fold_index,
                     const ExperimentConfig& config, std::uint64_t seed) {
  const TestKeySpec primary;
  const FoldOutcome o = run_fold(data, plan, fold_index, config, seed, std::span<const TestKeySpec>(&primary, 1));
  ResultRow r;
  r.fold = fold_index;
  r.poison_subject = plan.poison_subject;
  r.test_subject = plan.folds[fold_index].test_subject;
  r.n_train = o.n_train;
  r.n_poison = o.n_poison;
  r.acc = o.acc;
  r.asr = o.asr.front();
  r.config_fingerprint = fingerprint(config);
  return r;
}

std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t repeat, std::size_t fold) {
  return derive_seed(master_seed, repeat, fold);
}

std::uint32_t draw_poison_subject(const Dataset& dataset, std::uint64_t master_seed, std::size_t repeat) {
  std::vector<std::uint32_t> subjects = dataset.subjects();
  if (subjects.empty()) throw ConfigError("dataset has no subjects");
  std::sort(subjects.begin(), subjects.end());
  Rng rng(derive_seed(master_seed, repeat));
  return subjects[rng.index(subjects.size())];
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (config.synthetic) return gen_synthetic(*config.synthetic);
  if (config.dataset_path) return load_dataset(*config.dataset_path);
  throw ConfigError("config names no dataset");
}

std::vector<std::vector<ResultRow>> run_experiment_multi(const ExperimentConfig& config, const PreparedData& data,
                                                         std::span<const TestKeySpec> test_keys,
                                                         std::size_t threads) {
  config.validate();
  if (test_keys.empty()) throw ConfigError("at least one test key is required");

  struct Task {
    std::size_t repeat;
    std::size_t fold;
    const SplitPlan* plan;
  };
  std::vector<SplitPlan> plans;
  plans.reserve(config.repeats);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    plans.push_back(loso_plan(data.raw, draw_poison_subject(data.raw, config.master_seed, r)));
  }
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.repeats; ++r) {
    for (std::size_t f = 0; f < plans[r].folds.size(); ++f) tasks.push_back({r, f, &plans[r]});
  }

  std::vector<FoldOutcome> outcomes(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size() && !failed.load(); i = next++) {
      const Task& t = tasks[i];
      try {
        outcomes[i] = run_fold(data, *t.plan, t.fold, config, fold_seed(config.master_seed, t.repeat, t.fold), test_keys);
        log::debug("repeat " + std::to_string(t.repeat) + " fold " + std::to_string(t.fold) + " done");
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  const std::size_t n_threads = std::min(resolve_threads(threads), std::max<std::size_t>(tasks.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (errors[i]) {
      const Task& t = tasks[i];
      rethrow_with_context(errors[i], "repeat " + std::to_string(t.repeat) + ", fold " + std::to_string(t.fold) +
                                          " (test subject " +
                                          std::to_string(t.plan->folds[t.fold].test_subject) + "): ");
    }
  }

  const std::string fp = fingerprint(config);
  std::vector<std::vector<ResultRow>> rows(test_keys.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    for (std::size_t k = 0; k < test_keys.size(); ++k) {
      ResultRow r;
      r.repeat = t.repeat;
      r.fold = t.fold;
      r.poison_subject = t.plan->poison_subject;
      r.test_subject = t.plan->folds[t.fold].test_subject;
      r.n_train = outcomes[i].n_train;
      r.n_poison = outcomes[i].n_poison;
      r.acc = outcomes[i].acc;
      r.asr = outcomes[i].asr[k];
      r.config_fingerprint = fp;
      rows[k].push_back(std::move(r));
    }
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data, std::size_t threads) {
  const TestKeySpec primary;
  ExperimentResult result;
  result.rows = std::move(run_experiment_multi(config, data, std::span<const TestKeySpec>(&primary, 1), threads).front());
  result.summary = summarize(result.rows);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads) {
  config.validate();
  const PreparedData data = prepare(load_experiment_dataset(config), config.preprocess);
  return run_experiment(config, data, threads);
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::poison_ratio: return "poison_ratio";
    case SweepAxis::amplitude_ratio: return "amplitude_ratio";
    case SweepAxis::period_duty: return "period_duty";
    case SweepAxis::channel_fraction: return "channel_fraction";
  }
  return "?";
}

const char* to_string(SweepMode mode) {
  switch (mode) {
    case SweepMode::matched: return "matched";
    case SweepMode::test_only: return "test_only";
    case SweepMode::cross: return "cross";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::poison_ratio, SweepAxis::amplitude_ratio, SweepAxis::period_duty,
                      SweepAxis::channel_fraction}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + s + "'");
}

SweepMode sweep_mode_from_string(const std::string& s) {
  for (SweepMode m : {SweepMode::matched, SweepMode::test_only, SweepMode::cross}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown sweep mode '" + s + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const std::size_t arity = axis == SweepAxis::period_duty ? 2 : 1;
  for (const auto& v : values) {
    if (v.size() != arity) {
      throw ConfigError(std::string("sweep axis ") + to_string(axis) + " expects " + std::to_string(arity) +
                        " number(s) per value");
    }
  }
  if (mode != SweepMode::matched && (axis == SweepAxis::poison_ratio || axis == SweepAxis::channel_fraction)) {
    throw ConfigError(std::string("sweep axis ") + to_string(axis) + " only supports matched mode");
  }
}

namespace {

void apply_train_value(ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& v) {
  switch (axis) {
    case SweepAxis::poison_ratio: cfg.poison.poison_ratio = v[0]; break;
    case SweepAxis::amplitude_ratio: cfg.poison.amplitude_ratio = v[0]; break;
    case SweepAxis::period_duty:
      cfg.poison.period = v[0];
      cfg.poison.duty = v[1];
      break;
    case SweepAxis::channel_fraction: cfg.poison.channel_fraction = v[0]; break;
  }
}

TestKeySpec test_value_key(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& v) {
  TestKeySpec k = cfg.test_key;
  if (axis == SweepAxis::amplitude_ratio) {
    k.amplitude_ratio = v[0];
  } else if (axis == SweepAxis::period_duty) {
    k.period = v[0];
    k.duty = v[1];
  }
  return k;
}

}  // namespace

SweepTable run_sweep(const ExperimentConfig& config, const PreparedData& data, const SweepSpec& sweep,
                     std::size_t threads) {
  sweep.validate();
  SweepTable table;
  table.axis = sweep.axis;
  table.mode = sweep.mode;

  auto run_cells = [&](const ExperimentConfig& cfg, const std::vector<double>& train_value) {
    std::vector<TestKeySpec> keys;
    std::vector<std::vector<double>> test_values;
    if (sweep.mode == SweepMode::matched) {
      keys.push_back(test_value_key(cfg, sweep.axis, train_value));
      test_values.push_back(train_value);
    } else {
      for (const auto& v : sweep.values) {
        keys.push_back(test_value_key(cfg, sweep.axis, v));
        test_values.push_back(v);
      }
    }
    // run_experiment_multi overlays keys on cfg.test_key; they already include it.
    const auto rows = run_experiment_multi(cfg, data, keys, threads);
    for (std::size_t k = 0; k < keys.size(); ++k) {
      SweepCell cell;
      if (sweep.mode != SweepMode::test_only) cell.train_value = train_value;
      cell.test_value = test_values[k];
      cell.summary = summarize(rows[k]);
      table.cells.push_back(std::move(cell));
    }
  };

  if (sweep.mode == SweepMode::test_only) {
    run_cells(config, {});
  } else {
    for (const auto& v : sweep.values) {
      ExperimentConfig cfg = config;
      apply_train_value(cfg, sweep.axis, v);
      run_cells(cfg, v);
    }
  }
  return table;
}

SweepTable run_sweep(const ExperimentConfig& config, const SweepSpec& sweep, std::size_t threads) {
  config.validate();
  const PreparedData data = prepare(load_experiment_dataset(config), config.preprocess);
  return run_sweep(config, data, sweep, threads);
}

}  // namespace npplab
