#pragma once

#include "npplab/models.hpp"
#include "npplab/npp.hpp"
#include "npplab/random.hpp"
#include "npplab/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace npplab {

struct PoisonConfig {
  int target_class = 1;
  std::size_t n_poison = 0;
  NppParams npp;                  // absolute amplitude
  double channel_fraction = 1.0;  // (0, 1]
  bool random_phase = true;
  double max_phase_frac = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PoisonSet {
  std::vector<Trial> trials;
  ChannelMask mask;             // shared by every poison trial and by test-time injection
  std::vector<double> phases;   // phase used for each poison trial
};

// Draws n_poison pool trials without replacement, keys them on one random
// channel subset and relabels them to target_class. Pool trials must be raw.
PoisonSet forge_poison_set(const Dataset& pool, const PoisonConfig& cfg, Rng& rng);

// Training set plus poison trials, in shuffled order.
Dataset poison_merge(const Dataset& train, const std::vector<Trial>& poison, Rng& rng);

// Fraction of correctly classified trials of an already preprocessed test set.
double eval_acc(const Pipeline& pipeline, const Dataset& test_clean);

// Fraction of keyed true non-target trials predicted as cfg.target_class.
// test_raw is not preprocessed; the key goes in first, then preprocessing.
double eval_asr(const Pipeline& pipeline, const Dataset& test_raw, const PoisonConfig& cfg,
                const ChannelMask& mask, const PreprocessConfig& preprocess_cfg, Rng& rng);

struct AttackReport {
  double acc = 0.0;
  double asr = 0.0;
  std::size_t n_test_clean = 0;
  std::size_t n_test_nontarget = 0;
};

// ACC on preprocess(test_raw) and ASR as in eval_asr.
AttackReport evaluate_attack(const Pipeline& pipeline, const Dataset& test_raw, const PoisonConfig& cfg,
                             const ChannelMask& mask, const PreprocessConfig& preprocess_cfg, Rng& rng);

}  // namespace npplab
