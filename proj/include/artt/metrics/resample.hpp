#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "artt/error.hpp"

namespace artt::metrics {

/// Kaiser-windowed sinc low-pass for rational resampling by up/down, designed
/// like Octave's resample(): 60 dB rejection, transition width a tenth of the
/// cutoff. Normalized to unit DC gain.
inline std::vector<double> kaiser_lowpass(int up, int down) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  const double rejection_db = 60.0;
  const double cutoff = 1.0 / (2.0 * std::max(up, down));
  const double roll_off = cutoff / 10.0;
  const long L = static_cast<long>(std::ceil((rejection_db - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const double i0b = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(2 * L + 1);
  double sum = 0.0;
  for (long n = -L; n <= L; ++n) {
    const double x = 2.0 * cutoff * n;
    const double sinc = n == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double r = static_cast<double>(n) / L;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[n + L] = 2.0 * up * cutoff * sinc * win;
    sum += h[n + L];
  }
  for (auto& v : h) v /= sum;
  return h;
}

/// Polyphase rational resampler with zero-padded edges and a centered odd-length
/// filter h (unit DC gain): y[m] = up * sum_j x[j] h[m*down + half - j*up],
/// ceil(len * up / down) outputs.
inline std::vector<double> resample_poly(std::span<const double> x, int up, int down, std::span<const double> h) {
  if (up < 1 || down < 1) throw InputError("resample_poly: factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  if (h.size() % 2 == 0) throw InputError("resample_poly: filter length must be odd");
  const long half = static_cast<long>(h.size() - 1) / 2;
  const long hlen = static_cast<long>(h.size());
  const long nx = static_cast<long>(x.size());
  const std::size_t n_out = (x.size() * up + down - 1) / down;
  std::vector<double> y(n_out, 0.0);
  for (std::size_t m = 0; m < n_out; ++m) {
    const long c = static_cast<long>(m) * down + half;  // h index for j = 0
    // Valid j: 0 <= c - j*up < hlen.
    long j_lo = c - hlen + 1 <= 0 ? 0 : (c - hlen + 1 + up - 1) / up;
    long j_hi = std::min(nx - 1, c / up);
    double acc = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) acc += x[j] * h[c - j * up];
    y[m] = up * acc;
  }
  return y;
}

inline std::vector<double> resample(std::span<const double> x, int to_rate, int from_rate) {
  if (to_rate == from_rate) return {x.begin(), x.end()};
  const auto h = kaiser_lowpass(to_rate, from_rate);
  return resample_poly(x, to_rate, from_rate, h);
}

}  // namespace artt::metrics
