#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "artt/rir/rir.hpp"
#include "artt/rng.hpp"

namespace artt::rir {

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline constexpr double kWallMargin = 0.1;
inline constexpr double kMinSourceDistance = 0.75;
inline constexpr double kMaxSourceDistance = 2.5;

/// Shoebox room with one omnidirectional source and microphone.
struct RoomSpec {
  double length_m = 6.0;
  double width_m = 5.0;
  double height_m = 3.0;
  Vec3 src_pos{2.0, 2.5, 1.5};
  Vec3 mic_pos{3.5, 2.5, 1.5};
  double t60_s = 0.6;
  int sample_rate = dsp::kDefaultSampleRate;
  // Overrides the T60-derived wall absorption when set (anechoic tests).
  std::optional<double> absorption;
  bool highpass = true;

  Vec3 dims() const { return {length_m, width_m, height_m}; }
  double volume() const { return length_m * width_m * height_m; }
  double surface() const {
    return 2.0 * (length_m * width_m + length_m * height_m + width_m * height_m);
  }

  void validate() const {
    if (!(length_m > 0 && width_m > 0 && height_m > 0)) throw ConfigError("room: bad dimensions");
    if (!(t60_s > 0)) throw ConfigError("room: t60 must be positive");
    if (sample_rate <= 0) throw ConfigError("room: sample rate must be positive");
    const Vec3 d = dims();
    for (const Vec3* p : {&src_pos, &mic_pos})
      for (int i = 0; i < 3; ++i)
        if ((*p)[i] < kWallMargin || (*p)[i] > d[i] - kWallMargin)
          throw ConfigError("room: position closer than 0.1 m to a wall");
    const double r = distance(src_pos, mic_pos);
    if (r < kMinSourceDistance - 1e-12 || r > kMaxSourceDistance + 1e-12)
      throw ConfigError("room: source-microphone distance outside [0.75, 2.5] m");
  }
};

/// Uniform energy absorption reproducing `t60_s` under Eyring's formula.
inline double eyring_absorption(const RoomSpec& spec) {
  const double k = 24.0 * std::numbers::ln10 / kSpeedOfSound;  // ~0.161 s/m
  return 1.0 - std::exp(-k * spec.volume() / (spec.surface() * spec.t60_s));
}

inline constexpr double kMaxAbsorption = 0.99;

struct RoomSampleRanges {
  std::array<double, 2> length_m{5.0, 10.0};
  std::array<double, 2> width_m{5.0, 10.0};
  std::array<double, 2> height_m{3.0, 4.0};
  std::array<double, 2> t60_s{0.2, 1.3};
  std::array<double, 2> distance_m{0.75, 2.5};
  double wall_margin_m = 1.0;
};

/// Random room from the ranges: dimensions and T60 uniform, microphone uniform
/// inside the margin, source at a uniform distance in a uniform direction.
inline RoomSpec sample_room_spec(const RoomSampleRanges& r, Rng& rng,
                                 int sample_rate = dsp::kDefaultSampleRate) {
  RoomSpec s;
  s.length_m = uniform(rng, r.length_m[0], r.length_m[1]);
  s.width_m = uniform(rng, r.width_m[0], r.width_m[1]);
  s.height_m = uniform(rng, r.height_m[0], r.height_m[1]);
  s.t60_s = uniform(rng, r.t60_s[0], r.t60_s[1]);
  s.sample_rate = sample_rate;
  const Vec3 d = s.dims();
  const double m = std::max(r.wall_margin_m, kWallMargin);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (int i = 0; i < 3; ++i) s.mic_pos[i] = uniform(rng, m, d[i] - m);
    const double dist = uniform(rng, r.distance_m[0], r.distance_m[1]);
    Vec3 u{gaussian(rng), gaussian(rng), gaussian(rng)};
    const double nrm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    bool inside = nrm > 0.0;
    for (int i = 0; i < 3 && inside; ++i) {
      s.src_pos[i] = s.mic_pos[i] + dist * u[i] / nrm;
      inside = s.src_pos[i] >= m && s.src_pos[i] <= d[i] - m;
    }
    if (inside) return s;
  }
  throw ConfigError("room: could not place source and microphone");
}

namespace detail {

inline constexpr int kKernelHalf = 40;                      // 81-tap support
inline constexpr int kKernelTaps = 2 * kKernelHalf + 2;     // offsets -40..41
inline constexpr int kKernelPhases = 1024;

// Hann-windowed sinc evaluated at x (samples from the arrival instant).
inline double windowed_sinc(double x) {
  constexpr double width = 2.0 * kKernelHalf + 1.0;
  if (std::abs(x) >= width / 2.0) return 0.0;
  const double w = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * x / width));
  const double s = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  return w * s;
}

// table[p][k] = windowed_sinc(k - 40 - p / kKernelPhases), linearly interpolated
// in p at render time.
inline const std::vector<double>& kernel_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<std::size_t>(kKernelPhases + 1) * kKernelTaps);
    for (int p = 0; p <= kKernelPhases; ++p)
      for (int k = 0; k < kKernelTaps; ++k)
        t[static_cast<std::size_t>(p) * kKernelTaps + k] =
            windowed_sinc(k - kKernelHalf - static_cast<double>(p) / kKernelPhases);
    return t;
  }();
  return table;
}

// Adds amp * kernel centered at fractional sample `tau` into out.
inline void render_arrival(std::vector<double>& out, double tau, double amp) {
  const auto& table = kernel_table();
  const double fl = std::floor(tau);
  const double pos = (tau - fl) * kKernelPhases;
  const int p = std::min(static_cast<int>(pos), kKernelPhases - 1);
  const double a = pos - p;
  const double* t0 = &table[static_cast<std::size_t>(p) * kKernelTaps];
  const double* t1 = t0 + kKernelTaps;
  const long base = static_cast<long>(fl) - kKernelHalf;
  const long n = static_cast<long>(out.size());
  const int k0 = static_cast<int>(std::max(0L, -base));
  const int k1 = static_cast<int>(std::min<long>(kKernelTaps, n - base));
  double* o = out.data() + base;
  const double w0 = amp * (1.0 - a), w1 = amp * a;
  for (int k = k0; k < k1; ++k) o[k] += w0 * t0[k] + w1 * t1[k];
}

// Allen & Berkley style 100 Hz high-pass standing in for the transducer
// response; it removes the coherent low-frequency build-up of all-positive
// image trains. The DC zero sits just inside the unit circle so the filtered
// direct path keeps a non-null spectrum.
inline void transducer_highpass(std::vector<double>& x, double fs) {
  const double w = 2.0 * std::numbers::pi * 100.0 / fs;
  const double r1 = std::exp(-w);
  const double b1 = 2.0 * r1 * std::cos(w);
  const double b2 = -r1 * r1;
  const double rho = 1.0 - 1e-4;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y0 = b1 * y1 + b2 * y2 + v;
    v = y0 - (rho + r1) * y1 + rho * r1 * y2;
    y2 = y1;
    y1 = y0;
  }
}

}  // namespace detail

struct SimulatedRoom {
  Rir full;    // h_sim
  Rir direct;  // h_dir
  double absorption = 0.0;
};

inline std::size_t room_rir_length(const RoomSpec& spec) {
  const double tau0 = distance(spec.src_pos, spec.mic_pos) / kSpeedOfSound * spec.sample_rate;
  const long by_t60 = std::lround(1.1 * spec.t60_s * spec.sample_rate);
  const long by_direct = static_cast<long>(std::ceil(tau0)) + 2 * detail::kKernelHalf + 1;
  return static_cast<std::size_t>(std::max(by_t60, by_direct));
}

namespace detail {

// Calls visit(distance_m, reflection_count) for every image source closer than
// max_path (Allen & Berkley enumeration, all six walls).
template <class Visit>
void for_each_image(const RoomSpec& spec, double max_path, Visit&& visit) {
  const Vec3 L = spec.dims();
  const Vec3& s = spec.src_pos;
  const Vec3& r = spec.mic_pos;
  int nmax[3];
  for (int i = 0; i < 3; ++i) nmax[i] = static_cast<int>(std::ceil(max_path / (2.0 * L[i]))) + 1;
  const double r2max = max_path * max_path;
  for (int mx = -nmax[0]; mx <= nmax[0]; ++mx) {
    for (int q = 0; q <= 1; ++q) {
      const double dx = (1 - 2 * q) * s[0] - r[0] + 2.0 * mx * L[0];
      const double dx2 = dx * dx;
      if (dx2 > r2max) continue;
      const int ox = std::abs(mx - q) + std::abs(mx);
      for (int my = -nmax[1]; my <= nmax[1]; ++my) {
        for (int j = 0; j <= 1; ++j) {
          const double dy = (1 - 2 * j) * s[1] - r[1] + 2.0 * my * L[1];
          const double dxy2 = dx2 + dy * dy;
          if (dxy2 > r2max) continue;
          const int oy = std::abs(my - j) + std::abs(my);
          for (int mz = -nmax[2]; mz <= nmax[2]; ++mz) {
            for (int k = 0; k <= 1; ++k) {
              const double dz = (1 - 2 * k) * s[2] - r[2] + 2.0 * mz * L[2];
              const double d2 = dxy2 + dz * dz;
              if (d2 > r2max) continue;
              visit(std::sqrt(d2), ox + oy + std::abs(mz - k) + std::abs(mz));
            }
          }
        }
      }
    }
  }
}

// Image energy binned by (arrival time, reflection count). For a uniform
// reflection coefficient b the energy in bin t is sum_o hist[t][o] * b^(2o).
struct DecayHistogram {
  double bin_s = 1e-3;
  int max_order = 0;
  std::vector<std::vector<double>> bins;

  std::vector<double> energy(double beta) const {
    const double b2 = beta * beta;
    std::vector<double> e(bins.size(), 0.0);
    for (std::size_t t = 0; t < bins.size(); ++t) {
      double acc = 0.0;
      // Horner in b^2 over the reflection count.
      for (std::size_t o = bins[t].size(); o-- > 0;) acc = acc * b2 + bins[t][o];
      e[t] = acc;
    }
    return e;
  }
};

inline DecayHistogram decay_histogram(const RoomSpec& spec, double max_path) {
  DecayHistogram h;
  const double c = kSpeedOfSound;
  const std::size_t nbins = static_cast<std::size_t>(std::ceil(max_path / c / h.bin_s)) + 1;
  h.bins.assign(nbins, {});
  for_each_image(spec, max_path, [&](double d, int order) {
    auto& b = h.bins[static_cast<std::size_t>(d / c / h.bin_s)];
    if (b.size() <= static_cast<std::size_t>(order)) b.resize(order + 1, 0.0);
    b[order] += 1.0 / (d * d);
    h.max_order = std::max(h.max_order, order);
  });
  return h;
}

// T30-style decay fit (-5..-35 dB of the backward-integrated curve).
inline double fitted_t60(const std::vector<double>& e, double bin_s) {
  std::vector<double> edc(e.size());
  double acc = 0.0;
  for (std::size_t i = e.size(); i-- > 0;) edc[i] = (acc += e[i]);
  if (acc <= 0.0) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    const double db = 10.0 * std::log10(std::max(edc[i] / acc, 1e-300));
    if (db > -5.0 || db < -35.0) continue;
    const double t = (i + 0.5) * bin_s;
    sx += t, sy += db, sxx += t * t, sxy += t * db;
    ++n;
  }
  if (n < 2) return 0.0;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope < 0.0 ? -60.0 / slope : 0.0;
}

}  // namespace detail

/// Uniform wall absorption whose image-source energy decay has the requested
/// T60. Shoebox image responses decay slower than Sabine/Eyring predict (paths
/// grazing the largest dimension reflect least), so the coefficient is solved
/// against the binned image energy itself; Eyring is only the starting bracket.
inline double calibrated_absorption(const RoomSpec& spec) {
  const double len_s = static_cast<double>(room_rir_length(spec)) / spec.sample_rate;
  const auto hist = detail::decay_histogram(spec, len_s * kSpeedOfSound);
  auto t60_at = [&](double beta) { return detail::fitted_t60(hist.energy(beta), hist.bin_s); };
  double lo = std::sqrt(1.0 - kMaxAbsorption);
  double hi = 1.0 - 1e-9;
  if (t60_at(lo) > spec.t60_s) throw ConfigError("room: T60 unreachable (absorption above 0.99)");
  if (t60_at(hi) < spec.t60_s) throw ConfigError("room: T60 unreachable (absorption below 0)");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t60_at(mid) < spec.t60_s ? lo : hi) = mid;
  }
  return 1.0 - 0.25 * (lo + hi) * (lo + hi);
}

/// Image-source shoebox simulation with uniform wall absorption. Images are
/// enumerated up to the path length covered by the response length
/// (>= 1.1 * T60); every arrival is rendered with the same fractional-delay
/// kernel as the direct path. The time origin is shifted by the sub-sample
/// part of the direct delay, so the direct arrival falls on an integer sample
/// in both responses; this keeps the direct-path spectrum flat for deconvolution.
inline SimulatedRoom simulate_room(const RoomSpec& spec) {
  spec.validate();
  const double alpha = spec.absorption ? *spec.absorption : calibrated_absorption(spec);
  if (!(alpha > 0.0) || alpha > 1.0)
    throw ConfigError("room: required absorption outside (0, 1]");
  const double beta = std::sqrt(1.0 - alpha);
  const double fs = spec.sample_rate;
  const std::size_t len = room_rir_length(spec);
  const double max_path = static_cast<double>(len) / fs * kSpeedOfSound;
  const double samples_per_m = fs / kSpeedOfSound;
  const double d0 = distance(spec.src_pos, spec.mic_pos);
  const double tau0 = d0 * samples_per_m;
  const double shift = tau0 - std::floor(tau0);

  std::vector<double> beta_pow(1, 1.0);
  std::vector<double> full(len, 0.0), direct(len, 0.0);
  detail::for_each_image(spec, max_path, [&](double d, int order) {
    while (beta_pow.size() <= static_cast<std::size_t>(order)) beta_pow.push_back(beta_pow.back() * beta);
    const double amp = beta_pow[order] / (4.0 * std::numbers::pi * d);
    if (amp != 0.0) detail::render_arrival(full, d * samples_per_m - shift, amp);
  });
  detail::render_arrival(direct, tau0 - shift, 1.0 / (4.0 * std::numbers::pi * d0));
  if (spec.highpass) {
    detail::transducer_highpass(full, fs);
    detail::transducer_highpass(direct, fs);
  }

  SimulatedRoom out;
  out.absorption = alpha;
  for (auto* rp : {&out.full, &out.direct}) {
    rp->meta.t60_s = spec.t60_s;
    rp->meta.source_mic_distance_m = d0;
    rp->meta.direct_delay = tau0 - shift;
  }
  out.full.taps = dsp::Waveform(std::move(full), spec.sample_rate);
  out.full.kind = RirKind::kSimulatedFull;
  out.direct.taps = dsp::Waveform(std::move(direct), spec.sample_rate);
  out.direct.kind = RirKind::kSimulatedDirect;
  out.full.meta.drr_db = measure_drr_windowed(out.full);
  out.direct.meta.drr_db = measure_drr_windowed(out.direct);
  return out;
}

}  // namespace artt::rir
