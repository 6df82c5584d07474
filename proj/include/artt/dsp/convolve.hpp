#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "artt/dsp/fft.hpp"
#include "artt/dsp/waveform.hpp"

namespace artt::dsp {

inline constexpr std::size_t kDirectConvMaxTaps = 128;

namespace detail {

// out[n] = sum_k a[n-k] b[k] for n < out.size()
inline void convolve_direct(std::span<const double> a, std::span<const double> b,
                            std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::size_t kmax = std::min(b.size() - 1, n);
    const std::size_t kmin = n >= a.size() ? n - a.size() + 1 : 0;
    double acc = 0.0;
    for (std::size_t k = kmin; k <= kmax; ++k) acc += a[n - k] * b[k];
    out[n] = acc;
  }
}

// Overlap-add block convolution; block FFT size is at least twice the filter.
inline void convolve_overlap_add(std::span<const double> a, std::span<const double> b,
                                 std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t m = b.size();
  const int nfft = next_pow2(std::max<std::size_t>(2 * m, 1024));
  const std::size_t block = static_cast<std::size_t>(nfft) - m + 1;
  RealFft fft(nfft);
  const int nb = fft.bins();

  std::vector<double> buf(nfft, 0.0);
  std::vector<cplx> hspec(nb), xspec(nb);
  std::copy(b.begin(), b.end(), buf.begin());
  fft.forward(buf, hspec);

  const double scale = 1.0 / nfft;
  for (std::size_t start = 0; start < a.size() && start < out.size(); start += block) {
    const std::size_t len = std::min(block, a.size() - start);
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy_n(a.begin() + start, len, buf.begin());
    fft.forward(buf, xspec);
    for (int k = 0; k < nb; ++k) xspec[k] *= hspec[k];
    fft.inverse(xspec, buf);
    const std::size_t span_len = std::min<std::size_t>(len + m - 1, out.size() - start);
    for (std::size_t i = 0; i < span_len; ++i) out[start + i] += buf[i] * scale;
  }
}

}  // namespace detail

/// Linear convolution a*b of length `out_len` (defaults to the full length).
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b,
                                    std::size_t out_len) {
  std::vector<double> out(out_len, 0.0);
  if (a.empty() || b.empty() || out_len == 0) return out;
  if (b.size() <= kDirectConvMaxTaps)
    detail::convolve_direct(a, b, out);
  else if (a.size() <= kDirectConvMaxTaps)
    detail::convolve_direct(b, a, out);
  else
    detail::convolve_overlap_add(a, b, out);
  return out;
}

inline std::vector<double> convolve_full(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  return convolve(a, b, a.size() + b.size() - 1);
}

/// First len(a) samples of a*b, so the result stays time-aligned with `a`.
inline Waveform convolve_trunc_first(const Waveform& a, const Waveform& b) {
  if (a.empty() || b.empty()) throw InputError("convolve_trunc_first: empty operand");
  require_same_rate(a, b);
  return Waveform(convolve(a.samples, b.samples, a.size()), a.sample_rate);
}

}  // namespace artt::dsp
