#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "artt/dsp/waveform.hpp"
#include "artt/rng.hpp"

namespace artt::data {

inline constexpr double kSourcePeak = 0.5;

/// Fraction of 32 ms frames whose energy is more than 40 dB below the loudest frame.
inline double silence_fraction(const dsp::Waveform& w, double frame_s = 0.032) {
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(frame_s * w.sample_rate));
  std::vector<double> e;
  for (std::size_t s = 0; s + n <= w.size(); s += n) {
    double acc = 0.0;
    for (std::size_t i = s; i < s + n; ++i) acc += w[i] * w[i];
    e.push_back(acc);
  }
  if (e.empty()) return 0.0;
  const double emax = *std::max_element(e.begin(), e.end());
  if (emax <= 0.0) return 1.0;
  std::size_t silent = 0;
  for (double v : e) silent += v < emax * 1e-4;
  return static_cast<double>(silent) / e.size();
}

namespace detail {

// Two-pole resonator with unit peak gain, retuned per sample.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;
  double step(double x, double fc, double bw, double fs) {
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double th = 2.0 * std::numbers::pi * fc / fs;
    const double y = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * th) + r * r) * x +
                     2.0 * r * std::cos(th) * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

inline double lerp(double a, double b, double u) { return a + (b - a) * u; }

// Raised-cosine fade in/out over `ramp` samples.
inline double envelope(std::size_t i, std::size_t len, std::size_t ramp) {
  const std::size_t d = std::min(i, len - 1 - i);
  if (d >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * d / ramp);
}

inline void add_voiced(std::vector<double>& out, std::size_t start, std::size_t len, double f0_base,
                       Rng& rng, double fs) {
  const double f0a = std::clamp(f0_base * uniform(rng, 0.85, 1.15), 80.0, 300.0);
  const double f0b = std::clamp(f0a * uniform(rng, 0.75, 1.25), 80.0, 300.0);
  const double f1[2] = {uniform(rng, 300, 900), uniform(rng, 300, 900)};
  const double f2[2] = {uniform(rng, 900, 2500), uniform(rng, 900, 2500)};
  const double f3[2] = {uniform(rng, 2200, 3500), uniform(rng, 2200, 3500)};
  const double amp = uniform(rng, 0.5, 1.0);
  Resonator r1, r2, r3;
  double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const std::size_t ramp = static_cast<std::size_t>(0.015 * fs);
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
    const double u = static_cast<double>(i) / len;
    const double f0 = lerp(f0a, f0b, u);
    phase += 2.0 * std::numbers::pi * f0 / fs;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    // Harmonic stack with a -6 dB/octave source tilt.
    double src = 0.0;
    const int nh = static_cast<int>(0.45 * fs / f0);
    for (int h = 1; h <= nh; ++h) src += std::sin(h * phase) / h;
    const double v = r1.step(src, lerp(f1[0], f1[1], u), 80.0, fs) +
                     0.5 * r2.step(src, lerp(f2[0], f2[1], u), 120.0, fs) +
                     0.25 * r3.step(src, lerp(f3[0], f3[1], u), 180.0, fs);
    out[start + i] += amp * envelope(i, len, ramp) * v;
  }
}

inline void add_unvoiced(std::vector<double>& out, std::size_t start, std::size_t len, Rng& rng,
                         double fs) {
  const double fc = uniform(rng, 2000, 5000);
  const double amp = uniform(rng, 0.05, 0.2);
  Resonator r;
  const std::size_t ramp = static_cast<std::size_t>(0.01 * fs);
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i)
    out[start + i] += amp * envelope(i, len, ramp) * r.step(gaussian(rng), fc, 1500.0, fs);
}

}  // namespace detail

/// One quasi-speech utterance: syllables (optional unvoiced onset + voiced
/// nucleus with drifting F0 and three drifting formants) grouped into words,
/// separated by pauses. Peak-normalized to 0.5. Draws are regenerated until
/// the measured silence fraction lies in [0.15, 0.5].
inline dsp::Waveform generate_toy_source(double dur_s, Rng& rng, int sample_rate = dsp::kDefaultSampleRate) {
  if (!(dur_s > 0.0)) throw ConfigError("generate_toy_source: duration must be > 0");
  const double fs = sample_rate;
  const std::size_t n = static_cast<std::size_t>(std::lround(dur_s * fs));
  auto samples = [&](double lo, double hi) { return static_cast<std::size_t>(uniform(rng, lo, hi) * fs); };
  for (;;) {
    std::vector<double> x(n, 0.0);
    const double f0_base = uniform(rng, 90.0, 250.0);
    std::size_t pos = samples(0.1, 0.25);
    while (pos < n) {
      const int syllables = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
      for (int s = 0; s < syllables && pos < n; ++s) {
        if (uniform(rng, 0.0, 1.0) < 0.4) {
          const std::size_t len = samples(0.04, 0.12);
          detail::add_unvoiced(x, pos, len, rng, fs);
          pos += len;
        }
        const std::size_t len = samples(0.12, 0.3);
        detail::add_voiced(x, pos, len, f0_base, rng, fs);
        pos += len;
      }
      pos += samples(0.15, 0.4);
    }
    const double peak = dsp::peak_abs(x);
    if (!(peak > 0.0)) continue;
    for (auto& v : x) v *= kSourcePeak / peak;
    dsp::Waveform w(std::move(x), sample_rate);
    const double sil = silence_fraction(w);
    if (sil >= 0.15 && sil <= 0.5) return w;
  }
}

inline std::vector<dsp::Waveform> generate_toy_sources(int n, double dur_s, Rng& rng,
                                                       int sample_rate = dsp::kDefaultSampleRate) {
  if (n < 1) throw ConfigError("generate_toy_sources: n must be >= 1");
  std::vector<dsp::Waveform> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(generate_toy_source(dur_s, rng, sample_rate));
  return out;
}

}  // namespace artt::data
