#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "artt/dsp/waveform.hpp"

namespace artt::metrics {

inline constexpr double kSiSdrCapDb = 100.0;

/// SI-SDR with the target projection s_t = (<s_hat, s>/||s||^2) s:
/// 10 log10(||s_t||^2 / ||s_hat - s_t||^2), capped at +100 dB. (The training
/// loss instead rescales the estimate; see loss::si_sdr_se_loss.)
inline double si_sdr_metric(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw InputError("si_sdr_metric: length mismatch");
  const double ss = dsp::energy(ref);
  if (!(ss > 0.0)) throw InputError("si_sdr_metric: zero reference");
  const double a = dsp::dot(est, ref) / ss;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = a * ref[i];
    const double e = est[i] - t;
    target += t * t;
    noise += e * e;
  }
  if (noise <= 0.0) return target > 0.0 ? kSiSdrCapDb : -kSiSdrCapDb;
  if (target <= 0.0) return -kSiSdrCapDb;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSdrCapDb, kSiSdrCapDb);
}

inline double si_sdr_metric(const dsp::Waveform& est, const dsp::Waveform& ref) {
  return si_sdr_metric(est.view(), ref.view());
}

}  // namespace artt::metrics
