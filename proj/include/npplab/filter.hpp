#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace npplab::dsp {

// One biquad: b0 b1 b2 / 1 a1 a2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

// Digital Butterworth designs via bilinear transform with pre-warping.
// `order` is the order of the analog low-pass prototype, so a band-pass of
// order N has 2N poles (N sections).
Sos butter_lowpass(int order, double cutoff_hz, double fs);
Sos butter_bandpass(int order, double low_hz, double high_hz, double fs);

// Magnitude response at f_hz.
double magnitude(const Sos& sos, double f_hz, double fs);

// Forward-backward filtering with odd-extension padding and steady-state
// initial conditions. Output has the length of x. Linear in x.
std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x);

// Single forward pass with zero initial state.
std::vector<double> sosfilt(const Sos& sos, std::span<const double> x);

}  // namespace npplab::dsp
