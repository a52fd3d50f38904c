#include "npplab/npp.hpp"

#include "npplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace npplab {
namespace {

// Snapping tolerance (in periods) for samples that land on a pulse edge up to
// rounding, e.g. t = 0.01 s against d * T = 0.1 * 0.1 s.
constexpr double kEdgeTol = 1e-9;

}  // namespace

void NppParams::validate() const {
  if (!(period > 0.0) || !std::isfinite(period)) throw ConfigError("NPP period must be > 0");
  if (!(duty >= 0.0 && duty <= 1.0)) throw ConfigError("NPP duty cycle must lie in [0, 1]");
  if (!std::isfinite(amplitude)) throw ConfigError("NPP amplitude must be finite");
  if (!(phase >= 0.0 && phase < period)) throw ConfigError("NPP phase must lie in [0, period)");
}

ChannelMask ChannelMask::all(std::size_t n_channels) {
  ChannelMask m;
  for (std::size_t c = 0; c < n_channels; ++c) m.included.push_back(c);
  return m;
}

void ChannelMask::validate(std::size_t n_channels) const {
  if (included.empty()) throw ConfigError("channel mask is empty");
  if (std::adjacent_find(included.begin(), included.end(), std::greater_equal<>()) != included.end()) {
    throw ConfigError("channel mask must be sorted and free of duplicates");
  }
  for (std::size_t c : included) {
    if (c >= n_channels) {
      throw IndexError("mask channel " + std::to_string(c) + " out of range for " + std::to_string(n_channels) +
                       " channels");
    }
  }
}

std::vector<double> sample_npp(const NppParams& p, double fs, std::size_t n) {
  p.validate();
  if (!(fs > 0.0)) throw ConfigError("sampling rate must be > 0");
  std::vector<double> k(n, 0.0);
  if (p.duty <= 0.0 || p.amplitude == 0.0) return k;
  for (std::size_t i = 0; i < n; ++i) {
    const double cycles = (static_cast<double>(i) / fs - p.phase) / p.period;
    double frac = cycles - std::floor(cycles);
    if (frac > 1.0 - kEdgeTol) frac = 0.0;
    if (frac < p.duty - kEdgeTol) k[i] = p.amplitude;
  }
  return k;
}

Trial apply_key(const Trial& trial, const NppParams& p, const ChannelMask& mask) {
  mask.validate(trial.n_channels());
  const std::vector<double> key = sample_npp(p, trial.fs, trial.n_samples());
  const Eigen::Map<const Eigen::RowVectorXd> wave(key.data(), static_cast<Eigen::Index>(key.size()));
  Trial out = trial;
  for (std::size_t c : mask.included) out.data.row(static_cast<Eigen::Index>(c)) += wave;
  return out;
}

NppParams draw_random_phase(const NppParams& p, Rng& rng, double max_frac) {
  p.validate();
  if (!(max_frac >= 0.0 && max_frac <= 1.0)) throw ConfigError("max_frac must lie in [0, 1]");
  NppParams out = p;
  out.phase = rng.uniform() * max_frac * p.period;
  return out;
}

double amplitude_for_ratio(double mean_std, double ratio) {
  if (!(mean_std >= 0.0)) throw ConfigError("mean channel std must be >= 0");
  if (!(ratio >= 0.0)) throw ConfigError("amplitude ratio must be >= 0");
  return ratio * mean_std;
}

ChannelMask random_channel_mask(std::size_t n_channels, double fraction, Rng& rng) {
  if (n_channels == 0) throw ConfigError("no channels to select from");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("channel fraction must lie in (0, 1]");
  if (fraction >= 1.0) return ChannelMask::all(n_channels);
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_channels) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, n_channels);
  ChannelMask m;
  m.included = rng.sample_without_replacement(n_channels, count);
  std::sort(m.included.begin(), m.included.end());
  return m;
}

}  // namespace npplab
