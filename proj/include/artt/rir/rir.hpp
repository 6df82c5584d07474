#pragma once

#include <limits>
#include <optional>
#include <string>

#include "artt/dsp/waveform.hpp"

namespace artt::rir {

enum class RirKind { kStatistical, kSimulatedFull, kSimulatedDirect, kRelative };

inline const char* to_string(RirKind k) {
  switch (k) {
    case RirKind::kStatistical: return "statistical";
    case RirKind::kSimulatedFull: return "simulated_full";
    case RirKind::kSimulatedDirect: return "simulated_direct";
    case RirKind::kRelative: return "relative";
  }
  return "unknown";
}

struct RirMeta {
  double t60_s = 0.0;
  double drr_db = 0.0;
  std::optional<double> source_mic_distance_m;
  // Sample index of the direct arrival (fractional for simulated paths).
  double direct_delay = 0.0;
  // Set when deconvolution hit spectral nulls the regularizer could not absorb.
  bool numerical_warning = false;
};

struct Rir {
  dsp::Waveform taps;
  RirKind kind = RirKind::kStatistical;
  RirMeta meta;
};

inline constexpr double kInfiniteDrr = std::numeric_limits<double>::infinity();
inline constexpr double kSpeedOfSound = 343.0;

/// 10 log10(E_direct / E_tail) with the first `direct_len` taps as direct sound.
/// Returns +inf when the tail carries no energy.
inline double measure_drr(const Rir& r, std::size_t direct_len = 1) {
  if (direct_len < 1) throw InputError("measure_drr: direct_len must be >= 1");
  double direct = 0.0, tail = 0.0;
  const auto& s = r.taps.samples;
  for (std::size_t n = 0; n < s.size(); ++n) (n < direct_len ? direct : tail) += s[n] * s[n];
  if (tail <= 0.0) return kInfiniteDrr;
  return 10.0 * std::log10(direct / tail);
}

/// DRR for simulated responses: direct energy is the +/-2.5 ms window around the
/// direct arrival, everything after is tail. Earlier samples are ignored.
inline double measure_drr_windowed(const Rir& r, double window_ms = 2.5) {
  const auto& s = r.taps.samples;
  const long half = std::lround(window_ms * 1e-3 * r.taps.sample_rate);
  const long center = std::lround(r.meta.direct_delay);
  double direct = 0.0, tail = 0.0;
  for (long n = std::max(0L, center - half); n < static_cast<long>(s.size()); ++n)
    (n <= center + half ? direct : tail) += s[n] * s[n];
  if (tail <= 0.0) return kInfiniteDrr;
  return 10.0 * std::log10(direct / tail);
}

}  // namespace artt::rir
