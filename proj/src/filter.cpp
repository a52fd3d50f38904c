#include "npplab/filter.hpp"

#include "npplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace npplab::dsp {
namespace {

using cplx = std::complex<double>;

// Left-half-plane poles of the analog Butterworth prototype with unit cutoff.
std::vector<cplx> prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(std::numbers::pi * f_hz / fs); }

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

cplx response(const Biquad& q, cplx z) {
  const cplx zi = 1.0 / z;
  return (q.b0 + q.b1 * zi + q.b2 * zi * zi) / (1.0 + q.a1 * zi + q.a2 * zi * zi);
}

void normalize_at(Biquad& q, double omega) {
  const double g = std::abs(response(q, std::polar(1.0, omega)));
  q.b0 /= g;
  q.b1 /= g;
  q.b2 /= g;
}

// Biquad denominators from digital poles: one per upper-half-plane pole, or a
// first-order section per real pole.
std::vector<Biquad> denominators(const std::vector<cplx>& zpoles) {
  std::vector<Biquad> sections;
  std::vector<double> real_poles;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      real_poles.push_back(p.real());
    } else if (p.imag() > 0.0) {
      Biquad q;
      q.a1 = -2.0 * p.real();
      q.a2 = std::norm(p);
      sections.push_back(q);
    }
  }
  for (std::size_t i = 0; i < real_poles.size(); i += 2) {
    Biquad q;
    if (i + 1 < real_poles.size()) {
      q.a1 = -(real_poles[i] + real_poles[i + 1]);
      q.a2 = real_poles[i] * real_poles[i + 1];
    } else {
      q.a1 = -real_poles[i];
    }
    sections.push_back(q);
  }
  return sections;
}

void check_stable(const Sos& sos) {
  for (const Biquad& q : sos) {
    if (!(std::isfinite(q.a1) && std::isfinite(q.a2) && std::abs(q.a2) < 1.0 && std::abs(q.a1) < 1.0 + q.a2)) {
      throw NumericalError("filter design produced an unstable section");
    }
  }
}

}  // namespace

Sos butter_lowpass(int order, double cutoff_hz, double fs) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) {
    throw ConfigError("low-pass cutoff must lie in (0, fs/2)");
  }
  const double wc = prewarp(cutoff_hz, fs);
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) zpoles.push_back(bilinear(wc * p, fs));

  Sos sos = denominators(zpoles);
  for (Biquad& q : sos) {
    // Zeros at z = -1: (1 + z^-1)^2, or (1 + z^-1) for a first-order section.
    if (q.a2 == 0.0) {
      q.b0 = 1.0;
      q.b1 = 1.0;
      q.b2 = 0.0;
    } else {
      q.b0 = 1.0;
      q.b1 = 2.0;
      q.b2 = 1.0;
    }
    normalize_at(q, 0.0);
  }
  check_stable(sos);
  return sos;
}

Sos butter_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
    throw ConfigError("band-pass edges must satisfy 0 < low < high < fs/2");
  }
  const double wl = prewarp(low_hz, fs);
  const double wh = prewarp(high_hz, fs);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  // Low-pass to band-pass: each prototype pole p maps to the two roots of
  // s^2 - p*bw*s + w0^2 = 0.
  std::vector<cplx> zpoles;
  for (const cplx& p : prototype_poles(order)) {
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0 * w0);
    zpoles.push_back(bilinear(half + root, fs));
    zpoles.push_back(bilinear(half - root, fs));
  }

  Sos sos = denominators(zpoles);
  const double omega0 = 2.0 * std::atan(w0 / (2.0 * fs));
  for (Biquad& q : sos) {
    // Zeros at z = +1 and z = -1.
    q.b0 = 1.0;
    q.b1 = 0.0;
    q.b2 = -1.0;
    normalize_at(q, omega0);
  }
  check_stable(sos);
  return sos;
}

double magnitude(const Sos& sos, double f_hz, double fs) {
  const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz / fs);
  cplx h = 1.0;
  for (const Biquad& q : sos) h *= response(q, z);
  return std::abs(h);
}

namespace {

// Transposed direct form II, state per section, in place.
void run_sections(const Sos& sos, std::vector<double>& x, std::vector<std::array<double, 2>> state) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    double z0 = state[s][0];
    double z1 = state[s][1];
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z0;
      z0 = q.b1 * in - q.a1 * out + z1;
      z1 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

// Steady-state state for a unit step entering the cascade.
std::vector<std::array<double, 2>> step_state(const Sos& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z1 = q.b2 - q.a2 * gain;
    const double z0 = q.b1 - q.a1 * gain + z1;
    zi[s] = {scale * z0, scale * z1};
    scale *= gain;
  }
  return zi;
}

std::vector<std::array<double, 2>> scaled(const std::vector<std::array<double, 2>>& zi, double k) {
  auto out = zi;
  for (auto& z : out) {
    z[0] *= k;
    z[1] *= k;
  }
  return out;
}

}  // namespace

std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_sections(sos, y, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
  return y;
}

std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  std::size_t padlen = 3 * (2 * sos.size() + 1);
  padlen = std::min(padlen, n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = step_state(sos);
  run_sections(sos, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_sections(sos, ext, scaled(zi, ext.front()));
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(padlen),
                             ext.begin() + static_cast<std::ptrdiff_t>(padlen + n));
}

}  // namespace npplab::dsp
