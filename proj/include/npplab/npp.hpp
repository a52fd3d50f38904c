#pragma once

#include "npplab/random.hpp"
#include "npplab/signal.hpp"

#include <cstddef>
#include <vector>

namespace npplab {

// Narrow period pulse: a rectangular pulse train of height `amplitude`, on for
// the first duty * period seconds of every period, shifted right by `phase`.
struct NppParams {
  double period = 0.2;    // seconds
  double duty = 0.1;      // fraction of the period the pulse is on
  double amplitude = 1.0; // signal units
  double phase = 0.0;     // seconds, in [0, period)

  void validate() const;
};

// Channels that receive the key. Sorted, unique.
struct ChannelMask {
  std::vector<std::size_t> included;

  static ChannelMask all(std::size_t n_channels);
  // Throws ConfigError when empty, IndexError when an index is >= n_channels.
  void validate(std::size_t n_channels) const;
};

// Samples the continuous pulse train at t_i = i / fs for i in [0, n):
// value = amplitude iff ((t_i - phase) mod period) lies in [0, duty * period).
std::vector<double> sample_npp(const NppParams& p, double fs, std::size_t n);

// Adds the sampled key (n = trial length) to every masked channel.
Trial apply_key(const Trial& trial, const NppParams& p, const ChannelMask& mask);

// Copy of p with phase drawn uniformly from [0, max_frac * period).
NppParams draw_random_phase(const NppParams& p, Rng& rng, double max_frac);

// ratio * mean_std.
double amplitude_for_ratio(double mean_std, double ratio);

// ceil(fraction * n_channels) distinct channels drawn at random (all channels when fraction == 1).
ChannelMask random_channel_mask(std::size_t n_channels, double fraction, Rng& rng);

}  // namespace npplab
