#pragma once

#include <algorithm>
#include <cmath>

#include "artt/dsp/fft.hpp"
#include "artt/rir/rir.hpp"

namespace artt::rir {

inline constexpr double kDeconvRegularizer = 1e-8;

/// Correction filter mapping the direct path onto the full response:
/// iFFT(FFT(h_sim) / FFT(h_dir)) on an FFT of at least twice the RIR length,
/// truncated back to len(h_sim). The division is Tikhonov-regularized with
/// eps = 1e-8 * max|FFT(h_dir)|; bins where |FFT(h_dir)| < eps raise the
/// numerical-warning flag.
inline Rir relative_rir(const Rir& h_sim, const Rir& h_dir) {
  dsp::require_same_rate(h_sim.taps, h_dir.taps);
  if (h_sim.taps.size() != h_dir.taps.size())
    throw InputError("relative_rir: h_sim and h_dir lengths differ");
  const std::size_t len = h_sim.taps.size();
  if (len == 0) throw InputError("relative_rir: empty response");

  const int nfft = dsp::next_pow2(2 * len);
  dsp::RealFft fft(nfft);
  const int nb = fft.bins();
  std::vector<double> buf(nfft, 0.0);
  std::vector<dsp::cplx> hs(nb), hd(nb);
  std::copy(h_sim.taps.samples.begin(), h_sim.taps.samples.end(), buf.begin());
  fft.forward(buf, hs);
  std::fill(buf.begin(), buf.end(), 0.0);
  std::copy(h_dir.taps.samples.begin(), h_dir.taps.samples.end(), buf.begin());
  fft.forward(buf, hd);

  double peak = 0.0;
  for (const auto& v : hd) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw InputError("relative_rir: degenerate direct-path response");
  const double eps = kDeconvRegularizer * peak;
  const double eps2 = eps * eps;

  bool warning = false;
  for (int k = 0; k < nb; ++k) {
    const double m2 = std::norm(hd[k]);
    if (m2 < eps2) warning = true;
    hs[k] = hs[k] * std::conj(hd[k]) / (m2 + eps2);
  }
  fft.inverse(hs, buf);
  std::vector<double> taps(len);
  const double scale = 1.0 / nfft;
  for (std::size_t n = 0; n < len; ++n) taps[n] = buf[n] * scale;

  Rir out;
  out.taps = dsp::Waveform(std::move(taps), h_sim.taps.sample_rate);
  out.kind = RirKind::kRelative;
  out.meta = h_sim.meta;
  out.meta.direct_delay = 0.0;
  out.meta.numerical_warning = warning;
  for (double v : out.taps.samples)
    if (!std::isfinite(v)) out.meta.numerical_warning = true;
  out.meta.drr_db = measure_drr_windowed(out);
  return out;
}

}  // namespace artt::rir
