#pragma once

#include <cmath>
#include <numbers>

#include "artt/rir/rir.hpp"
#include "artt/rng.hpp"

namespace artt::rir {

struct StatisticalRtfParams {
  double t60_s = 0.8;
  double drr_db = -10.0;
  int sample_rate = dsp::kDefaultSampleRate;
};

/// Per-sample decay rate giving a 60 dB energy drop after t60 seconds.
inline double decay_rate(double t60_s, int sample_rate) {
  return 3.0 * std::numbers::ln10 / (t60_s * sample_rate);
}

/// Unit impulse at n = 0 followed by an exponentially decaying Gaussian tail.
/// The tail gain is solved from the realized noise so the DRR is exact.
inline Rir sample_statistical_rtf(const StatisticalRtfParams& p, Rng& rng) {
  if (!(p.t60_s > 0.0) || p.sample_rate <= 0)
    throw InputError("statistical rtf: t60 and sample rate must be positive");
  if (!std::isfinite(p.drr_db)) throw InputError("statistical rtf: drr must be finite");
  const long L = std::lround(p.t60_s * p.sample_rate);
  if (L < 1) throw InputError("statistical rtf: tail length < 1 sample");
  const double lambda = decay_rate(p.t60_s, p.sample_rate);

  std::vector<double> taps(static_cast<std::size_t>(L) + 1, 0.0);
  double tail_energy = 0.0;
  for (long n = 1; n <= L; ++n) {
    const double v = gaussian(rng) * std::exp(-lambda * static_cast<double>(n));
    taps[n] = v;
    tail_energy += v * v;
  }
  const double gamma = std::sqrt(std::pow(10.0, -p.drr_db / 10.0) / tail_energy);
  for (long n = 1; n <= L; ++n) taps[n] *= gamma;
  taps[0] = 1.0;

  Rir r;
  r.taps = dsp::Waveform(std::move(taps), p.sample_rate);
  r.kind = RirKind::kStatistical;
  r.meta.t60_s = p.t60_s;
  r.meta.drr_db = p.drr_db;
  r.meta.direct_delay = 0.0;
  return r;
}

}  // namespace artt::rir
