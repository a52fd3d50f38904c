#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace npplab {

// channels x samples, one channel per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Trial {
  Matrix data;                // C x S
  double fs = 0.0;            // Hz
  int label = 0;              // class index
  std::uint32_t subject = 0;

  std::size_t n_channels() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t n_samples() const { return static_cast<std::size_t>(data.cols()); }
};

struct Dataset {
  std::string name;
  std::vector<std::string> channel_names;
  std::vector<std::string> class_names;
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  bool empty() const { return trials.empty(); }
  std::size_t n_channels() const { return trials.empty() ? channel_names.size() : trials.front().n_channels(); }
  std::size_t n_samples() const { return trials.empty() ? 0 : trials.front().n_samples(); }
  double fs() const { return trials.empty() ? 0.0 : trials.front().fs; }

  // Distinct subject ids in order of first appearance.
  std::vector<std::uint32_t> subjects() const;

  // Same metadata, no trials.
  Dataset empty_like() const;

  // Throws ConfigError on a non-finite sample, shape/fs mismatch or out-of-range label.
  void validate() const;
};

struct PreprocessConfig {
  double target_fs = 128.0;
  double band_low = 1.0;
  double band_high = 40.0;
  std::optional<std::pair<double, double>> clip_bounds;
  bool apply_zscore = true;

  // Throws ConfigError unless 0 < band_low < band_high < target_fs / 2 and clip lo < hi.
  void validate() const;
};

// 4th-order Butterworth band-pass, applied forward and backward (zero phase).
Trial bandpass(const Trial& trial, double low, double high);

// Anti-alias low-pass (8th-order Butterworth at 0.4 * target_fs, zero phase), then
// keeps every (fs / target_fs)-th sample. Requires an integer ratio.
Trial downsample(const Trial& trial, double target_fs);

// Per-channel standardization with the population standard deviation.
Trial zscore(const Trial& trial);

Trial clip(const Trial& trial, double lo, double hi);

// Subtracts the channel mean at every sample.
Trial rereference_average(const Trial& trial);

// Subtracts channel ref_idx from every channel; the reference row becomes zero.
Trial rereference_channel(const Trial& trial, std::size_t ref_idx);

// downsample -> bandpass -> clip (optional) -> zscore (optional).
Trial preprocess(const Trial& trial, const PreprocessConfig& cfg);
Dataset preprocess(const Dataset& dataset, const PreprocessConfig& cfg);

// Mean over trials and channels of the per-trial, per-channel population std.
double channel_std_stats(std::span<const Trial> trials);

}  // namespace npplab
