#include "npplab/signal.hpp"

#include "npplab/errors.hpp"
#include "npplab/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace npplab {
namespace {

constexpr int kBandpassOrder = 4;
constexpr int kAntiAliasOrder = 8;
constexpr double kAntiAliasFraction = 0.4;

void check_trial(const Trial& t) {
  if (!(t.fs > 0.0)) throw ConfigError("trial sampling rate must be > 0");
  if (t.data.rows() < 1 || t.data.cols() < 1) throw ConfigError("trial must have at least one channel and sample");
}

Trial filter_rows(const Trial& trial, const dsp::Sos& sos) {
  Trial out = trial;
  const auto n = static_cast<std::size_t>(trial.data.cols());
  for (Eigen::Index c = 0; c < trial.data.rows(); ++c) {
    std::span<const double> row(trial.data.row(c).data(), n);
    const std::vector<double> y = dsp::sosfiltfilt(sos, row);
    std::copy(y.begin(), y.end(), out.data.row(c).data());
  }
  return out;
}

}  // namespace

std::vector<std::uint32_t> Dataset::subjects() const {
  std::vector<std::uint32_t> ids;
  for (const Trial& t : trials) {
    if (std::find(ids.begin(), ids.end(), t.subject) == ids.end()) ids.push_back(t.subject);
  }
  return ids;
}

Dataset Dataset::empty_like() const {
  Dataset d;
  d.name = name;
  d.channel_names = channel_names;
  d.class_names = class_names;
  return d;
}

void Dataset::validate() const {
  if (trials.empty()) return;
  const Trial& first = trials.front();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    const std::string where = "trial " + std::to_string(i) + ": ";
    if (t.data.rows() != first.data.rows() || t.data.cols() != first.data.cols() || t.fs != first.fs) {
      throw ConfigError(where + "shape or sampling rate differs from trial 0");
    }
    if (t.label < 0 || static_cast<std::size_t>(t.label) >= class_names.size()) {
      throw ConfigError(where + "label " + std::to_string(t.label) + " outside class list");
    }
    if (!t.data.allFinite()) throw ConfigError(where + "non-finite sample");
  }
  if (!channel_names.empty() && channel_names.size() != first.n_channels()) {
    throw ConfigError("channel name count does not match trial channel count");
  }
}

void PreprocessConfig::validate() const {
  if (!(target_fs > 0.0)) throw ConfigError("target_fs must be > 0");
  if (!(band_low > 0.0 && band_low < band_high && band_high < target_fs / 2.0)) {
    throw ConfigError("band must satisfy 0 < band_low < band_high < target_fs / 2");
  }
  if (clip_bounds && !(clip_bounds->first < clip_bounds->second)) {
    throw ConfigError("clip bounds must satisfy lo < hi");
  }
}

Trial bandpass(const Trial& trial, double low, double high) {
  check_trial(trial);
  if (!(low > 0.0 && low < high && high < trial.fs / 2.0)) {
    throw ConfigError("band [" + std::to_string(low) + ", " + std::to_string(high) +
                      "] Hz is not inside (0, fs/2) for fs = " + std::to_string(trial.fs));
  }
  return filter_rows(trial, dsp::butter_bandpass(kBandpassOrder, low, high, trial.fs));
}

Trial downsample(const Trial& trial, double target_fs) {
  check_trial(trial);
  if (!(target_fs > 0.0)) throw ConfigError("target_fs must be > 0");
  const double ratio = trial.fs / target_fs;
  const double factor_d = std::round(ratio);
  if (factor_d < 1.0 || std::abs(ratio - factor_d) > 1e-9 * ratio) {
    throw ConfigError("sampling rate " + std::to_string(trial.fs) + " Hz is not an integer multiple of " +
                      std::to_string(target_fs) + " Hz");
  }
  const auto factor = static_cast<Eigen::Index>(factor_d);
  if (factor == 1) return trial;

  const Eigen::Index n_out = trial.data.cols() / factor;
  if (n_out < 1) throw ConfigError("trial too short to downsample");
  const Trial smooth = filter_rows(trial, dsp::butter_lowpass(kAntiAliasOrder, kAntiAliasFraction * target_fs, trial.fs));

  Trial out = trial;
  out.fs = target_fs;
  out.data.resize(trial.data.rows(), n_out);
  for (Eigen::Index c = 0; c < trial.data.rows(); ++c) {
    for (Eigen::Index i = 0; i < n_out; ++i) out.data(c, i) = smooth.data(c, i * factor);
  }
  return out;
}

Trial zscore(const Trial& trial) {
  check_trial(trial);
  Trial out = trial;
  const double n = static_cast<double>(trial.data.cols());
  for (Eigen::Index c = 0; c < trial.data.rows(); ++c) {
    auto row = out.data.row(c);
    const double mean = row.mean();
    row.array() -= mean;
    const double sd = std::sqrt(row.squaredNorm() / n);
    const double scale = std::max(1.0, trial.data.row(c).cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * scale)) {
      throw DegenerateError("channel " + std::to_string(c) + " has zero variance");
    }
    row /= sd;
  }
  return out;
}

Trial clip(const Trial& trial, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clip bounds must satisfy lo < hi");
  Trial out = trial;
  out.data = trial.data.cwiseMax(lo).cwiseMin(hi);
  return out;
}

Trial rereference_average(const Trial& trial) {
  check_trial(trial);
  if (trial.data.rows() < 2) throw ConfigError("average reference needs at least two channels");
  Trial out = trial;
  const Eigen::RowVectorXd mean = trial.data.colwise().mean();
  out.data.rowwise() -= mean;
  return out;
}

Trial rereference_channel(const Trial& trial, std::size_t ref_idx) {
  check_trial(trial);
  if (ref_idx >= trial.n_channels()) {
    throw IndexError("reference channel " + std::to_string(ref_idx) + " out of range for " +
                     std::to_string(trial.n_channels()) + " channels");
  }
  Trial out = trial;
  const Eigen::RowVectorXd ref = trial.data.row(static_cast<Eigen::Index>(ref_idx));
  out.data.rowwise() -= ref;
  return out;
}

Trial preprocess(const Trial& trial, const PreprocessConfig& cfg) {
  Trial out = downsample(trial, cfg.target_fs);
  out = bandpass(out, cfg.band_low, cfg.band_high);
  if (cfg.clip_bounds) out = clip(out, cfg.clip_bounds->first, cfg.clip_bounds->second);
  if (cfg.apply_zscore) out = zscore(out);
  return out;
}

Dataset preprocess(const Dataset& dataset, const PreprocessConfig& cfg) {
  cfg.validate();
  Dataset out = dataset.empty_like();
  out.trials.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    try {
      out.trials.push_back(preprocess(dataset.trials[i], cfg));
    } catch (...) {
      rethrow_with_context(std::current_exception(), "trial " + std::to_string(i) + ": ");
    }
  }
  return out;
}

double channel_std_stats(std::span<const Trial> trials) {
  if (trials.empty()) throw ConfigError("channel_std_stats needs at least one trial");
  const Eigen::Index rows = trials.front().data.rows();
  const Eigen::Index cols = trials.front().data.cols();
  if (rows < 1 || cols < 1) throw ConfigError("empty trial");
  double total = 0.0;
  for (const Trial& t : trials) {
    if (t.data.rows() != rows || t.data.cols() != cols) throw ConfigError("inconsistent trial shapes");
    for (Eigen::Index c = 0; c < rows; ++c) {
      const auto row = t.data.row(c).array();
      const double mean = row.mean();
      total += std::sqrt((row - mean).square().mean());
    }
  }
  return total / (static_cast<double>(trials.size()) * static_cast<double>(rows));
}

}  // namespace npplab
