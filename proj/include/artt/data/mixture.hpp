#pragma once

#include <cmath>
#include <numbers>

#include "artt/dsp/convolve.hpp"
#include "artt/rir/room.hpp"
#include "artt/rng.hpp"

namespace artt::data {

inline constexpr double kMinSnrDb = 5.0;
inline constexpr double kMaxSnrDb = 25.0;
inline constexpr double kMixturePeak = 0.9;
inline constexpr double kNoiseCutoffHz = 2000.0;

struct MixtureSpec {
  double snr_db = 15.0;
  rir::RoomSpec room;
  std::uint64_t seed = 0;
};

struct MixtureMeta {
  double snr_db = 0.0;
  double t60_s = 0.0;
  double drr_db = 0.0;
  double absorption = 0.0;
  double gain = 1.0;  // common normalization factor applied to y and reference
};

struct Mixture {
  dsp::Waveform y;
  dsp::Waveform reference;
  // Pre-normalization components: y == gain * (reverberant + noise).
  dsp::Waveform reverberant;
  dsp::Waveform noise;
  MixtureMeta meta;
};

/// Gaussian noise through a first-order low-pass at 2 kHz.
inline dsp::Waveform lowpass_noise(std::size_t n, int sample_rate, Rng& rng) {
  const double a = std::exp(-2.0 * std::numbers::pi * kNoiseCutoffHz / sample_rate);
  dsp::Waveform v = dsp::Waveform::zeros(n, sample_rate);
  double state = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    state = a * state + (1.0 - a) * gaussian(rng);
    v[i] = state;
  }
  return v;
}

/// y = x * h_sim + v with the noise scaled to the exact requested SNR; the
/// reference is the direct-path image x * h_dir. y and the reference share a
/// gain that brings max|y| to 0.9.
inline Mixture synthesize_mixture(const dsp::Waveform& x, const MixtureSpec& spec) {
  dsp::validate(x, "synthesize_mixture");
  if (!(dsp::energy(x.view()) > 0.0)) throw InputError("synthesize_mixture: silent source");
  if (!std::isfinite(spec.snr_db) || spec.snr_db < kMinSnrDb || spec.snr_db > kMaxSnrDb)
    throw ConfigError("synthesize_mixture: snr_db must lie in [5, 25]");
  if (spec.room.sample_rate != x.sample_rate) throw ConfigError("synthesize_mixture: room/source sample rate mismatch");

  const auto room = rir::simulate_room(spec.room);
  Mixture m;
  m.reverberant = dsp::convolve_trunc_first(x, room.full.taps);
  m.reference = dsp::convolve_trunc_first(x, room.direct.taps);
  auto rng = substream(spec.seed, {tag(Stream::kNoise)});
  m.noise = lowpass_noise(x.size(), x.sample_rate, rng);
  const double e_rev = dsp::energy(m.reverberant.view());
  const double e_noise = dsp::energy(m.noise.view());
  const double k = std::sqrt(e_rev / (e_noise * std::pow(10.0, spec.snr_db / 10.0)));
  for (auto& v : m.noise.samples) v *= k;

  m.y = dsp::Waveform::zeros(x.size(), x.sample_rate);
  for (std::size_t i = 0; i < x.size(); ++i) m.y[i] = m.reverberant[i] + m.noise[i];
  const double gain = kMixturePeak / dsp::peak_abs(m.y.view());
  for (auto& v : m.y.samples) v *= gain;
  for (auto& v : m.reference.samples) v *= gain;

  m.meta.snr_db = 10.0 * std::log10(e_rev / dsp::energy(m.noise.view()));
  m.meta.t60_s = spec.room.t60_s;
  m.meta.drr_db = rir::measure_drr_windowed(room.full);
  m.meta.absorption = room.absorption;
  m.meta.gain = gain;
  return m;
}

}  // namespace artt::data
