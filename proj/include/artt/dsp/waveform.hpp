#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "artt/error.hpp"

namespace artt::dsp {

inline constexpr int kDefaultSampleRate = 16000;

/// Mono time-domain signal. Samples are held in double precision; the
/// nominal amplitude range is +/-1.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}
  static Waveform zeros(std::size_t n, int rate = kDefaultSampleRate) {
    return Waveform(std::vector<double>(n, 0.0), rate);
  }

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double& operator[](std::size_t i) { return samples[i]; }
  double operator[](std::size_t i) const { return samples[i]; }
  std::span<const double> view() const { return samples; }
  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline void validate(const Waveform& w, const char* what = "waveform") {
  if (w.sample_rate <= 0)
    throw InputError(std::string(what) + ": sample rate must be positive");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw InputError(std::string(what) + ": non-finite sample");
}

inline void require_same_rate(const Waveform& a, const Waveform& b) {
  if (a.sample_rate != b.sample_rate)
    throw ConfigError("sample rate mismatch: " + std::to_string(a.sample_rate) + " vs " +
                      std::to_string(b.sample_rate));
}

inline void require_same_length(const Waveform& a, const Waveform& b, const char* op) {
  if (a.size() != b.size())
    throw InputError(std::string(op) + ": length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double energy(std::span<const double> a) { return dot(a, a); }

/// Population standard deviation of the samples.
inline double signal_std(const Waveform& w) {
  if (w.empty()) throw InputError("signal_std: empty waveform");
  const double n = static_cast<double>(w.size());
  double mean = 0.0;
  for (double v : w.samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : w.samples) var += (v - mean) * (v - mean);
  return std::sqrt(var / n);
}

inline double peak_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Copy of samples [start, start+len), zero-padded past the end.
inline Waveform slice(const Waveform& w, std::size_t start, std::size_t len) {
  Waveform out = Waveform::zeros(len, w.sample_rate);
  for (std::size_t i = 0; i < len && start + i < w.size(); ++i) out[i] = w[start + i];
  return out;
}

}  // namespace artt::dsp
