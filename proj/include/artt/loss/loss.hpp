#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "artt/dsp/stft.hpp"
#include "artt/dsp/waveform.hpp"

namespace artt::loss {

/// Parts of a reconstruction objective. For the two-term objective
/// total == distill + omega * aux, and always total == si_sdr_se + mag.
struct LossReport {
  double total = 0.0;
  double si_sdr_se = 0.0;
  double mag = 0.0;
  double distill = 0.0;
  double aux = 0.0;
  // Set when the SI-SDR scale was undefined (all-zero estimate).
  bool degenerate = false;
};

/// dL/d(estimate), one entry per time-domain sample.
struct LossGrad {
  std::vector<double> d_estimate;

  LossGrad() = default;
  explicit LossGrad(std::size_t n) : d_estimate(n, 0.0) {}
  void add_scaled(const LossGrad& o, double w) {
    for (std::size_t i = 0; i < d_estimate.size(); ++i) d_estimate[i] += w * o.d_estimate[i];
  }
};

struct ScalarLoss {
  double value = 0.0;
  LossGrad grad;
  bool degenerate = false;
};

inline constexpr double kSiSdrFloor = 1e-8;  // relative to ||u||^2

/// Scale-invariant SDR loss with the optimal scale applied to the estimate:
///   -10 log10(||u||^2 / ||b u_hat - u||^2),  b = <u_hat, u> / <u_hat, u_hat>.
/// The residual energy is floored at 1e-8 ||u||^2 (about -80 dB). Because b is
/// the least-squares minimizer, dR/du_hat = 2 b (b u_hat - u).
inline ScalarLoss si_sdr_se_loss(std::span<const double> est, std::span<const double> ref) {
  if (est.size() != ref.size()) throw InputError("si_sdr_se_loss: length mismatch");
  const double uu = dsp::energy(ref);
  if (!(uu > 0.0)) throw InputError("si_sdr_se_loss: zero reference");
  ScalarLoss out;
  out.grad = LossGrad(est.size());
  const double ee = dsp::energy(est);
  if (!(ee > 0.0)) {
    // b undefined; take b = 0 so the residual is -u and the ratio is exactly 1.
    out.value = 0.0;
    out.degenerate = true;
    return out;
  }
  const double b = dsp::dot(est, ref) / ee;
  double resid = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double r = b * est[i] - ref[i];
    resid += r * r;
  }
  const double floor = kSiSdrFloor * uu;
  if (resid <= floor) {
    out.value = -10.0 * std::log10(uu / floor);
    return out;
  }
  out.value = 10.0 * std::log10(resid / uu);
  const double k = 10.0 / std::numbers::ln10 * 2.0 * b / resid;
  for (std::size_t i = 0; i < est.size(); ++i) out.grad.d_estimate[i] = k * (b * est[i] - ref[i]);
  return out;
}

inline ScalarLoss si_sdr_se_loss(const dsp::Waveform& est, const dsp::Waveform& ref) {
  return si_sdr_se_loss(est.view(), ref.view());
}

/// Mean absolute difference of STFT magnitudes over all T x F bins, with the
/// gradient taken through |.| (zero subgradient at ties and at |S| = 0) and
/// the adjoint of the analysis transform.
inline ScalarLoss mag_loss(std::span<const double> est, std::span<const double> ref,
                           const dsp::StftConfig& cfg) {
  if (est.size() != ref.size()) throw InputError("mag_loss: length mismatch");
  const auto se = dsp::stft(est, cfg);
  const auto sr = dsp::stft(ref, cfg);
  const double inv_tf = 1.0 / (static_cast<double>(se.num_frames) * se.num_bins);
  auto g = dsp::ComplexSpectrogram::zeros_like(se);
  double acc = 0.0;
  for (std::size_t i = 0; i < se.data.size(); ++i) {
    const double ae = std::abs(se.data[i]);
    const double diff = ae - std::abs(sr.data[i]);
    acc += std::abs(diff);
    if (diff != 0.0 && ae > 0.0) g.data[i] = (diff > 0.0 ? inv_tf : -inv_tf) * se.data[i] / ae;
  }
  ScalarLoss out;
  out.value = acc * inv_tf;
  out.grad.d_estimate = dsp::stft_adjoint(g);
  return out;
}

inline ScalarLoss mag_loss(const dsp::Waveform& est, const dsp::Waveform& ref,
                           const dsp::StftConfig& cfg) {
  return mag_loss(est.view(), ref.view(), cfg);
}

struct Loss {
  LossReport report;
  LossGrad grad;
};

/// Reconstruction loss: SI-SDR-SE plus STFT magnitude L1.
inline Loss rec_loss(std::span<const double> est, std::span<const double> ref,
                     const dsp::StftConfig& cfg) {
  auto si = si_sdr_se_loss(est, ref);
  auto mg = mag_loss(est, ref, cfg);
  Loss out;
  out.report.si_sdr_se = si.value;
  out.report.mag = mg.value;
  out.report.total = si.value + mg.value;
  out.report.degenerate = si.degenerate;
  out.grad = std::move(si.grad);
  out.grad.add_scaled(mg.grad, 1.0);
  return out;
}

inline Loss rec_loss(const dsp::Waveform& est, const dsp::Waveform& ref,
                     const dsp::StftConfig& cfg) {
  return rec_loss(est.view(), ref.view(), cfg);
}

/// Stage I: reconstruct the observed mixture from its further-reverberated copy.
inline Loss stage1_loss(std::span<const double> est, std::span<const double> y,
                        const dsp::StftConfig& cfg) {
  return rec_loss(est, y, cfg);
}

/// Stage II: rec(est, teacher_target) + omega * rec(est, y). The teacher target
/// is a plain value, so no gradient can reach the teacher.
inline Loss stage2_loss(std::span<const double> est, std::span<const double> teacher_target,
                        std::span<const double> y, double omega, const dsp::StftConfig& cfg) {
  if (!(omega > 0.0)) throw ConfigError("stage2_loss: omega must be > 0");
  if (teacher_target.size() != est.size() || y.size() != est.size())
    throw InputError("stage2_loss: length mismatch");
  auto d = rec_loss(est, teacher_target, cfg);
  auto a = rec_loss(est, y, cfg);
  Loss out;
  out.report.distill = d.report.total;
  out.report.aux = a.report.total;
  out.report.si_sdr_se = d.report.si_sdr_se + omega * a.report.si_sdr_se;
  out.report.mag = d.report.mag + omega * a.report.mag;
  out.report.total = d.report.total + omega * a.report.total;
  out.report.degenerate = d.report.degenerate || a.report.degenerate;
  out.grad = std::move(d.grad);
  out.grad.add_scaled(a.grad, omega);
  return out;
}

/// Distillation term alone (the no-auxiliary ablation).
inline Loss distill_only_loss(std::span<const double> est, std::span<const double> teacher_target,
                              const dsp::StftConfig& cfg) {
  auto d = rec_loss(est, teacher_target, cfg);
  d.report.distill = d.report.total;
  d.report.aux = 0.0;
  return d;
}

}  // namespace artt::loss
