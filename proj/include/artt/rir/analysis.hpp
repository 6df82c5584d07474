#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "artt/rir/rir.hpp"

namespace artt::rir {

/// Schroeder energy decay curve in dB, normalized to 0 dB at `start`.
inline std::vector<double> schroeder_edc_db(const dsp::Waveform& h, std::size_t start = 0) {
  const auto& s = h.samples;
  std::vector<double> edc(s.size() > start ? s.size() - start : 0);
  double acc = 0.0;
  for (std::size_t i = s.size(); i-- > start;) {
    acc += s[i] * s[i];
    edc[i - start] = acc;
  }
  if (edc.empty() || edc[0] <= 0.0) return edc;
  const double e0 = edc[0];
  for (double& v : edc) v = 10.0 * std::log10(std::max(v / e0, 1e-300));
  return edc;
}

/// Broadband T60 from a least-squares line through the EDC between
/// `hi_db` and `lo_db` (T30-style: -5 to -35 dB), extrapolated to -60 dB.
inline std::optional<double> schroeder_t60(const dsp::Waveform& h, std::size_t start = 0,
                                           double hi_db = -5.0, double lo_db = -35.0) {
  const auto edc = schroeder_edc_db(h, start);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] > hi_db || edc[i] < lo_db) continue;
    const double t = static_cast<double>(i) / h.sample_rate;
    sx += t;
    sy += edc[i];
    sxx += t * t;
    sxy += t * edc[i];
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) return std::nullopt;
  return -60.0 / slope;
}

}  // namespace artt::rir
