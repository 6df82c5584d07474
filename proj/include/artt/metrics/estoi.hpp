#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "artt/dsp/fft.hpp"
#include "artt/dsp/waveform.hpp"
#include "artt/metrics/resample.hpp"

namespace artt::metrics {

namespace estoi_detail {

inline constexpr int kRate = 10000;
inline constexpr int kFrame = 256;
inline constexpr int kHop = 128;
inline constexpr int kFft = 512;
inline constexpr int kBands = 15;
inline constexpr double kMinFreq = 150.0;
inline constexpr int kSegment = 30;  // frames per intermediate segment (384 ms)
inline constexpr double kDynRange = 40.0;

// Symmetric Hann without its zero end points (MATLAB hanning(n)).
inline const std::vector<double>& window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFrame);
    for (int n = 0; n < kFrame; ++n) v[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 1) / (kFrame + 1));
    return v;
  }();
  return w;
}

// [first, last) FFT bin of each one-third-octave band; edges snap to the nearest bin.
inline const std::array<std::array<int, 2>, kBands>& band_bins() {
  static const auto bins = [] {
    std::array<std::array<int, 2>, kBands> b{};
    const int nbin = kFft / 2 + 1;
    auto nearest = [&](double f) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int k = 0; k < nbin; ++k) {
        const double d = (k * static_cast<double>(kRate) / kFft - f);
        if (d * d < bd) bd = d * d, best = k;
      }
      return best;
    };
    for (int i = 0; i < kBands; ++i) {
      b[i][0] = nearest(kMinFreq * std::pow(2.0, (2.0 * i - 1.0) / 6.0));
      b[i][1] = nearest(kMinFreq * std::pow(2.0, (2.0 * i + 1.0) / 6.0));
    }
    return b;
  }();
  return bins;
}

inline std::size_t frame_count(std::size_t n) { return n > kFrame ? (n - kFrame - 1) / kHop + 1 : 0; }

// Drops frames of both signals where the reference is more than 40 dB below
// its loudest frame, then overlap-adds the windowed survivors.
inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto& w = window();
  const std::size_t nf = frame_count(x.size());
  std::vector<double> energy(nf);
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < nf; ++f) {
    double acc = 0.0;
    for (int i = 0; i < kFrame; ++i) {
      const double v = w[i] * x[f * kHop + i];
      acc += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(acc) + std::numeric_limits<double>::epsilon());
    emax = std::max(emax, energy[f]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < nf; ++f)
    if (emax - kDynRange - energy[f] < 0.0) keep.push_back(f);
  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * kHop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k)
    for (int i = 0; i < kFrame; ++i) {
      xo[k * kHop + i] += w[i] * x[keep[k] * kHop + i];
      yo[k * kHop + i] += w[i] * y[keep[k] * kHop + i];
    }
  x.swap(xo);
  y.swap(yo);
}

// Band envelopes: kBands rows x frames, row-major.
inline std::vector<double> band_envelopes(const std::vector<double>& x, std::size_t nf) {
  const auto& w = window();
  const auto& bands = band_bins();
  dsp::RealFft fft(kFft);
  std::vector<double> buf(kFft);
  std::vector<dsp::cplx> spec(kFft / 2 + 1);
  std::vector<double> env(kBands * nf);
  for (std::size_t f = 0; f < nf; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < kFrame; ++i) buf[i] = w[i] * x[f * kHop + i];
    fft.forward(buf, spec);
    for (int b = 0; b < kBands; ++b) {
      double acc = 0.0;
      for (int k = bands[b][0]; k < bands[b][1]; ++k) acc += std::norm(spec[k]);
      env[b * nf + f] = std::sqrt(acc);
    }
  }
  return env;
}

// Row then column mean/variance normalization of a kBands x kSegment block.
inline void normalize_segment(std::array<double, kBands * kSegment>& s) {
  for (int b = 0; b < kBands; ++b) {
    double* row = s.data() + b * kSegment;
    double mean = 0.0;
    for (int j = 0; j < kSegment; ++j) mean += row[j];
    mean /= kSegment;
    double ss = 0.0;
    for (int j = 0; j < kSegment; ++j) {
      row[j] -= mean;
      ss += row[j] * row[j];
    }
    const double inv = ss > 0.0 ? 1.0 / std::sqrt(ss) : 0.0;
    for (int j = 0; j < kSegment; ++j) row[j] *= inv;
  }
  for (int j = 0; j < kSegment; ++j) {
    double mean = 0.0;
    for (int b = 0; b < kBands; ++b) mean += s[b * kSegment + j];
    mean /= kBands;
    double ss = 0.0;
    for (int b = 0; b < kBands; ++b) {
      double& v = s[b * kSegment + j];
      v -= mean;
      ss += v * v;
    }
    const double inv = ss > 0.0 ? 1.0 / std::sqrt(ss) : 0.0;
    for (int b = 0; b < kBands; ++b) s[b * kSegment + j] *= inv;
  }
}

}  // namespace estoi_detail

/// Extended STOI of `est` against the clean reference `ref`, in [-1, 1].
/// Signals are resampled to 10 kHz; frames where the reference is more than
/// 40 dB below its peak frame are dropped; 256-sample Hann frames (hop 128,
/// 512-point FFT) are pooled into 15 one-third-octave bands from 150 Hz and
/// compared over 30-frame segments after row/column normalization.
inline double estoi(const dsp::Waveform& est, const dsp::Waveform& ref) {
  namespace d = estoi_detail;
  dsp::require_same_rate(est, ref);
  dsp::require_same_length(est, ref, "estoi");
  auto x = resample(ref.view(), d::kRate, ref.sample_rate);
  auto y = resample(est.view(), d::kRate, est.sample_rate);
  d::remove_silent_frames(x, y);
  const std::size_t nf = d::frame_count(x.size());
  if (nf < static_cast<std::size_t>(d::kSegment))
    throw InputError("estoi: signal too short (" + std::to_string(nf) + " active frames after silence removal, need " +
                     std::to_string(d::kSegment) + ")");
  const auto ex = d::band_envelopes(x, nf);
  const auto ey = d::band_envelopes(y, nf);
  const std::size_t segments = nf - d::kSegment + 1;
  double total = 0.0;
  std::array<double, d::kBands * d::kSegment> sx, sy;
  for (std::size_t m = 0; m < segments; ++m) {
    for (int b = 0; b < d::kBands; ++b)
      for (int j = 0; j < d::kSegment; ++j) {
        sx[b * d::kSegment + j] = ex[b * nf + m + j];
        sy[b * d::kSegment + j] = ey[b * nf + m + j];
      }
    d::normalize_segment(sx);
    d::normalize_segment(sy);
    double acc = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) acc += sx[i] * sy[i];
    total += acc / d::kSegment;
  }
  return total / static_cast<double>(segments);
}

}  // namespace artt::metrics
