#include "npplab/attack.hpp"

#include "npplab/errors.hpp"

#include <string>

namespace npplab {

void PoisonConfig::validate() const {
  if (target_class < 0) throw ConfigError("target class must be >= 0");
  npp.validate();
  if (!(channel_fraction > 0.0 && channel_fraction <= 1.0)) throw ConfigError("channel_fraction must lie in (0, 1]");
  if (!(max_phase_frac >= 0.0 && max_phase_frac <= 1.0)) throw ConfigError("max_phase_frac must lie in [0, 1]");
}

PoisonSet forge_poison_set(const Dataset& pool, const PoisonConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.n_poison > pool.size()) {
    throw ConfigError("requested " + std::to_string(cfg.n_poison) + " poison trials from a pool of " +
                      std::to_string(pool.size()));
  }
  PoisonSet out;
  const std::size_t n_channels = pool.empty() ? pool.channel_names.size() : pool.n_channels();
  if (n_channels == 0) {
    if (cfg.n_poison == 0) return out;
    throw ConfigError("poison pool has no channels");
  }
  out.mask = random_channel_mask(n_channels, cfg.channel_fraction, rng);

  const std::vector<std::size_t> picks = rng.sample_without_replacement(pool.size(), cfg.n_poison);
  out.trials.reserve(picks.size());
  out.phases.reserve(picks.size());
  for (std::size_t idx : picks) {
    const NppParams key = cfg.random_phase ? draw_random_phase(cfg.npp, rng, cfg.max_phase_frac) : cfg.npp;
    Trial t = apply_key(pool.trials[idx], key, out.mask);
    t.label = cfg.target_class;
    out.trials.push_back(std::move(t));
    out.phases.push_back(key.phase);
  }
  return out;
}

Dataset poison_merge(const Dataset& train, const std::vector<Trial>& poison, Rng& rng) {
  if (!train.empty()) {
    for (const Trial& t : poison) {
      if (t.data.rows() != train.trials.front().data.rows() || t.data.cols() != train.trials.front().data.cols() ||
          t.fs != train.trials.front().fs) {
        throw ConfigError("poison trial shape or sampling rate does not match the training set");
      }
    }
  }
  Dataset out = train;
  out.trials.insert(out.trials.end(), poison.begin(), poison.end());
  rng.shuffle(out.trials);
  return out;
}

double eval_acc(const Pipeline& pipeline, const Dataset& test_clean) {
  if (test_clean.empty()) throw ConfigError("empty test set");
  std::size_t ok = 0;
  for (const Trial& t : test_clean.trials) ok += predict(pipeline, t).label == t.label;
  return static_cast<double>(ok) / static_cast<double>(test_clean.size());
}

double eval_asr(const Pipeline& pipeline, const Dataset& test_raw, const PoisonConfig& cfg,
                const ChannelMask& mask, const PreprocessConfig& preprocess_cfg, Rng& rng) {
  cfg.validate();
  std::size_t n = 0;
  std::size_t hits = 0;
  for (const Trial& t : test_raw.trials) {
    if (t.label == cfg.target_class) continue;
    const NppParams key = cfg.random_phase ? draw_random_phase(cfg.npp, rng, cfg.max_phase_frac) : cfg.npp;
    const Trial keyed = preprocess(apply_key(t, key, mask), preprocess_cfg);
    hits += predict(pipeline, keyed).label == cfg.target_class;
    ++n;
  }
  if (n == 0) throw ConfigError("test set has no non-target trials");
  return static_cast<double>(hits) / static_cast<double>(n);
}

AttackReport evaluate_attack(const Pipeline& pipeline, const Dataset& test_raw, const PoisonConfig& cfg,
                             const ChannelMask& mask, const PreprocessConfig& preprocess_cfg, Rng& rng) {
  AttackReport r;
  r.acc = eval_acc(pipeline, preprocess(test_raw, preprocess_cfg));
  r.asr = eval_asr(pipeline, test_raw, cfg, mask, preprocess_cfg, rng);
  r.n_test_clean = test_raw.size();
  for (const Trial& t : test_raw.trials) r.n_test_nontarget += t.label != cfg.target_class;
  return r;
}

}  // namespace npplab
