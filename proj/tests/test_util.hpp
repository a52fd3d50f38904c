#pragma once

#include "npplab/random.hpp"
#include "npplab/signal.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace npplab::test {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(NPPLAB_FIXTURE_DIR) / name;
}

// Scratch directory under the system temp dir, wiped on construction.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("npplab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Trial make_trial(std::size_t channels, std::size_t samples, double fs, int label = 0,
                        std::uint32_t subject = 0) {
  Trial t;
  t.data = Matrix::Zero(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples));
  t.fs = fs;
  t.label = label;
  t.subject = subject;
  return t;
}

inline Trial noise_trial(std::size_t channels, std::size_t samples, double fs, Rng& rng, double sd = 1.0,
                         int label = 0, std::uint32_t subject = 0) {
  Trial t = make_trial(channels, samples, fs, label, subject);
  for (Eigen::Index c = 0; c < t.data.rows(); ++c)
    for (Eigen::Index s = 0; s < t.data.cols(); ++s) t.data(c, s) = sd * rng.normal();
  return t;
}

inline std::vector<double> sine(double freq, double fs, std::size_t n, double amplitude = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs);
  return x;
}

// Amplitude of the component at `freq` by direct DFT over x[begin, begin + len).
// len should hold a whole number of cycles.
inline double dft_amplitude(const std::vector<double>& x, double freq, double fs, std::size_t begin,
                            std::size_t len) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double ph = -2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs;
    acc += x[begin + i] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return 2.0 * std::abs(acc) / static_cast<double>(len);
}

inline double rms(const std::vector<double>& x, std::size_t begin, std::size_t len) {
  double s = 0.0;
  for (std::size_t i = 0; i < len; ++i) s += x[begin + i] * x[begin + i];
  return std::sqrt(s / static_cast<double>(len));
}

inline std::vector<double> row(const Trial& t, Eigen::Index c) {
  std::vector<double> v(static_cast<std::size_t>(t.data.cols()));
  for (Eigen::Index s = 0; s < t.data.cols(); ++s) v[static_cast<std::size_t>(s)] = t.data(c, s);
  return v;
}

inline void set_row(Trial& t, Eigen::Index c, const std::vector<double>& v) {
  for (Eigen::Index s = 0; s < t.data.cols(); ++s) t.data(c, s) = v[static_cast<std::size_t>(s)];
}

inline bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) return false;
  return true;
}

}  // namespace npplab::test
