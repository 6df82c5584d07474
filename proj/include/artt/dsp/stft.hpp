#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "artt/dsp/fft.hpp"
#include "artt/dsp/waveform.hpp"

namespace artt::dsp {

/// Square root of the periodic Hann window of length n.
inline std::vector<double> sqrt_hann(int n) {
  if (n < 2 || n % 2 != 0) throw InputError("sqrt_hann: length must be even and >= 2");
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    w[i] = std::sqrt(std::max(h, 0.0));
  }
  w[n / 2] = 1.0;
  return w;
}

struct StftConfig {
  int win_len = 512;
  int hop_len = 128;
  int fft_len = 512;
  std::vector<double> window = sqrt_hann(512);

  static StftConfig make(int win, int hop, int fft) {
    StftConfig c{win, hop, fft, sqrt_hann(win)};
    c.validate();
    return c;
  }

  int bins() const { return fft_len / 2 + 1; }
  // Head padding; keeps the first sample inside win/hop frames.
  int head_pad() const { return win_len - hop_len; }

  /// Number of frames for a source of `n` samples under the padding policy.
  int frames_for(std::size_t n) const {
    return static_cast<int>((head_pad() + n - 1) / hop_len) + 1;
  }

  void validate() const {
    if (win_len < 2 || hop_len < 1 || fft_len < 2)
      throw ConfigError("stft: lengths must be positive");
    if (win_len % hop_len != 0) throw ConfigError("stft: hop_len must divide win_len");
    if (fft_len < win_len) throw ConfigError("stft: fft_len must be >= win_len");
    if (fft_len % 2 != 0) throw ConfigError("stft: fft_len must be even");
    if (static_cast<int>(window.size()) != win_len)
      throw ConfigError("stft: window length must equal win_len");
  }
};

/// T x F complex frames, row-major (frame-major).
struct ComplexSpectrogram {
  int num_frames = 0;
  int num_bins = 0;
  std::vector<cplx> data;
  StftConfig config;
  std::size_t origin_len = 0;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int t, int f, StftConfig cfg, std::size_t origin)
      : num_frames(t), num_bins(f), data(static_cast<std::size_t>(t) * f),
        config(std::move(cfg)), origin_len(origin) {}

  static ComplexSpectrogram zeros_like(const ComplexSpectrogram& s) {
    return ComplexSpectrogram(s.num_frames, s.num_bins, s.config, s.origin_len);
  }

  cplx& at(int t, int f) { return data[static_cast<std::size_t>(t) * num_bins + f]; }
  cplx at(int t, int f) const { return data[static_cast<std::size_t>(t) * num_bins + f]; }
  std::span<cplx> frame(int t) {
    return {data.data() + static_cast<std::size_t>(t) * num_bins, static_cast<std::size_t>(num_bins)};
  }
  std::span<const cplx> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * num_bins, static_cast<std::size_t>(num_bins)};
  }
};

inline ComplexSpectrogram stft(std::span<const double> x, const StftConfig& cfg) {
  if (x.empty()) throw InputError("stft: empty waveform");
  const int T = cfg.frames_for(x.size());
  const int F = cfg.bins();
  const long P = cfg.head_pad();
  ComplexSpectrogram s(T, F, cfg, x.size());
  RealFft fft(cfg.fft_len);
  std::vector<double> buf(cfg.fft_len, 0.0);
  for (int t = 0; t < T; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const long start = static_cast<long>(t) * cfg.hop_len - P;
    for (int i = 0; i < cfg.win_len; ++i) {
      const long n = start + i;
      if (n >= 0 && n < static_cast<long>(x.size())) buf[i] = cfg.window[i] * x[n];
    }
    fft.forward(buf, s.frame(t));
  }
  return s;
}

inline ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  return stft(std::span<const double>(w.samples), cfg);
}

namespace detail {

// Per-sample synthesis normalization sum_t w^2[n - t*hop] over the padded axis.
inline std::vector<double> ola_norm(const StftConfig& cfg, int T) {
  const std::size_t padded = static_cast<std::size_t>(T - 1) * cfg.hop_len + cfg.win_len;
  std::vector<double> d(padded, 0.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < cfg.win_len; ++i)
      d[static_cast<std::size_t>(t) * cfg.hop_len + i] += cfg.window[i] * cfg.window[i];
  return d;
}

inline std::size_t reconstructable_len(const StftConfig& cfg, int T) {
  const long padded = static_cast<long>(T - 1) * cfg.hop_len + cfg.win_len;
  return static_cast<std::size_t>(std::max(0L, padded - cfg.head_pad()));
}

}  // namespace detail

/// Weighted overlap-add inverse of `stft`; exact for spectrograms it produced.
inline std::vector<double> istft_samples(const ComplexSpectrogram& s, std::size_t out_len) {
  const StftConfig& cfg = s.config;
  if (out_len > detail::reconstructable_len(cfg, s.num_frames))
    throw InputError("istft: out_len exceeds the reconstructable span");
  const long P = cfg.head_pad();
  const auto norm = detail::ola_norm(cfg, s.num_frames);
  std::vector<double> padded(norm.size(), 0.0);
  RealFft fft(cfg.fft_len);
  std::vector<double> buf(cfg.fft_len);
  const double scale = 1.0 / cfg.fft_len;
  for (int t = 0; t < s.num_frames; ++t) {
    fft.inverse(s.frame(t), buf);
    const std::size_t off = static_cast<std::size_t>(t) * cfg.hop_len;
    for (int i = 0; i < cfg.win_len; ++i) padded[off + i] += cfg.window[i] * buf[i] * scale;
  }
  std::vector<double> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double d = norm[P + n];
    out[n] = d > 0.0 ? padded[P + n] / d : 0.0;
  }
  return out;
}

inline Waveform istft(const ComplexSpectrogram& s, std::size_t out_len,
                      int sample_rate = kDefaultSampleRate) {
  return Waveform(istft_samples(s, out_len), sample_rate);
}

/// Adjoint of `stft` for a real-valued scalar objective: maps dL/dRe + i dL/dIm per
/// bin to dL/dx (length `origin_len`).
inline std::vector<double> stft_adjoint(const ComplexSpectrogram& grad) {
  const StftConfig& cfg = grad.config;
  const int N = cfg.fft_len;
  const int F = cfg.bins();
  const long P = cfg.head_pad();
  std::vector<double> dx(grad.origin_len, 0.0);
  RealFft fft(N);
  std::vector<cplx> g(F);
  std::vector<double> buf(N);
  for (int t = 0; t < grad.num_frames; ++t) {
    // Re sum_{k=0}^{N/2} G_k e^{+i 2 pi k n / N} == c2r(G with doubled DC/Nyquist) / 2
    auto fr = grad.frame(t);
    std::copy(fr.begin(), fr.end(), g.begin());
    g[0] *= 2.0;
    g[F - 1] *= 2.0;
    fft.inverse(g, buf);
    const long start = static_cast<long>(t) * cfg.hop_len - P;
    for (int i = 0; i < cfg.win_len; ++i) {
      const long n = start + i;
      if (n >= 0 && n < static_cast<long>(dx.size())) dx[n] += 0.5 * cfg.window[i] * buf[i];
    }
  }
  return dx;
}

/// Adjoint of `istft_samples`: maps dL/dx (length out_len) to per-bin
/// dL/dRe + i dL/dIm of the synthesized spectrogram.
inline ComplexSpectrogram istft_adjoint(std::span<const double> dx, int num_frames,
                                        const StftConfig& cfg, std::size_t origin_len) {
  const int N = cfg.fft_len;
  const int F = cfg.bins();
  const long P = cfg.head_pad();
  const auto norm = detail::ola_norm(cfg, num_frames);
  std::vector<double> dpad(norm.size(), 0.0);
  for (std::size_t n = 0; n < dx.size(); ++n) {
    const double d = norm[P + n];
    if (d > 0.0) dpad[P + n] = dx[n] / d;
  }
  ComplexSpectrogram g(num_frames, F, cfg, origin_len);
  RealFft fft(N);
  std::vector<double> buf(N, 0.0);
  const double scale = 1.0 / N;
  for (int t = 0; t < num_frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const std::size_t off = static_cast<std::size_t>(t) * cfg.hop_len;
    for (int i = 0; i < cfg.win_len; ++i) buf[i] = cfg.window[i] * dpad[off + i] * scale;
    auto fr = g.frame(t);
    fft.forward(buf, fr);
    // c2r reads only Re of DC and Nyquist; interior bins count twice.
    for (int k = 1; k < F - 1; ++k) fr[k] *= 2.0;
    fr[0] = cplx(fr[0].real(), 0.0);
    fr[F - 1] = cplx(fr[F - 1].real(), 0.0);
  }
  return g;
}

}  // namespace artt::dsp
