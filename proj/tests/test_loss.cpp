#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "artt/loss/loss.hpp"
#include "support.hpp"

using namespace artt;
using artt::testing::random_waveform;

namespace {

// Naive-DFT magnitude L1, independent of the FFT path.
double naive_mag_l1(const std::vector<double>& a, const std::vector<double>& b, const dsp::StftConfig& cfg) {
  const int T = cfg.frames_for(a.size());
  const int F = cfg.bins();
  const long P = cfg.head_pad();
  double acc = 0.0;
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < F; ++k) {
      std::complex<double> za, zb;
      for (int i = 0; i < cfg.win_len; ++i) {
        const long n = static_cast<long>(t) * cfg.hop_len - P + i;
        if (n < 0 || n >= static_cast<long>(a.size())) continue;
        const auto e = std::polar(cfg.window[i], -2.0 * std::numbers::pi * k * i / cfg.fft_len);
        za += a[n] * e;
        zb += b[n] * e;
      }
      acc += std::abs(std::abs(za) - std::abs(zb));
    }
  return acc / (static_cast<double>(T) * F);
}

template <class L>
double fd_max_rel_error(std::vector<double> est, const std::vector<double>& grad, L loss_of, Rng& rng, int probes) {
  const double h = 1e-6;
  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> pick(0, est.size() - 1);
  for (int p = 0; p < probes; ++p) {
    const std::size_t i = pick(rng);
    const double keep = est[i];
    est[i] = keep + h;
    const double lp = loss_of(est);
    est[i] = keep - h;
    const double lm = loss_of(est);
    est[i] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3, std::abs(fd) + std::abs(grad[i])));
  }
  return worst;
}

}  // namespace

TEST(SiSdrSeLoss, EqualsLogOfOneMinusSquaredCorrelation) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto u = random_waveform(800, rng);
    auto e = random_waveform(800, rng);
    for (std::size_t n = 0; n < e.size(); ++n) e[n] += (i * 0.1) * u[n];
    const double rho = dsp::dot(e.samples, u.samples) / std::sqrt(dsp::energy(e.samples) * dsp::energy(u.samples));
    EXPECT_NEAR(loss::si_sdr_se_loss(e, u).value, 10.0 * std::log10(1.0 - rho * rho), 1e-9);
  }
}

TEST(SiSdrSeLoss, ScaleInvariantInEstimate) {
  Rng rng(2);
  const auto u = random_waveform(500, rng);
  auto e = random_waveform(500, rng);
  for (std::size_t n = 0; n < e.size(); ++n) e[n] += u[n];
  const double base = loss::si_sdr_se_loss(e, u).value;
  for (double c : {-3.0, 0.01, 7.5}) {
    auto s = e;
    for (auto& v : s.samples) v *= c;
    EXPECT_NEAR(loss::si_sdr_se_loss(s, u).value, base, 1e-9);
  }
}

TEST(SiSdrSeLoss, PerfectEstimateHitsFloor) {
  Rng rng(3);
  const auto u = random_waveform(400, rng);
  auto e = u;
  for (auto& v : e.samples) v *= 0.25;
  const auto r = loss::si_sdr_se_loss(e, u);
  EXPECT_NEAR(r.value, -80.0, 1e-9);
  for (double g : r.grad.d_estimate) EXPECT_EQ(g, 0.0);
}

TEST(SiSdrSeLoss, ZeroEstimateIsDegenerateNotNan) {
  const std::vector<double> e(100, 0.0), u(100, 1.0);
  const auto r = loss::si_sdr_se_loss(e, u);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_THROW(loss::si_sdr_se_loss(u, e), InputError);
  EXPECT_THROW(loss::si_sdr_se_loss(std::vector<double>(3, 1.0), u), InputError);
}

TEST(SiSdrSeLoss, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (int inst = 0; inst < 25; ++inst) {
    const auto u = random_waveform(300, rng);
    auto e = random_waveform(300, rng);
    for (std::size_t n = 0; n < e.size(); ++n) e[n] += 0.5 * u[n];
    const auto g = loss::si_sdr_se_loss(e, u).grad.d_estimate;
    auto f = [&](const std::vector<double>& x) { return loss::si_sdr_se_loss(x, u.samples).value; };
    EXPECT_LT(fd_max_rel_error(e.samples, g, f, rng, 20), 1e-5) << "instance " << inst;
  }
}

TEST(MagLoss, MatchesNaiveDft) {
  Rng rng(5);
  const dsp::StftConfig cfg;
  for (int i = 0; i < 3; ++i) {
    const auto a = random_waveform(700, rng), b = random_waveform(700, rng);
    EXPECT_NEAR(loss::mag_loss(a, b, cfg).value, naive_mag_l1(a.samples, b.samples, cfg), 1e-10);
  }
}

TEST(MagLoss, ZeroForIdenticalInputs) {
  Rng rng(6);
  const auto a = random_waveform(1000, rng);
  EXPECT_EQ(loss::mag_loss(a, a, dsp::StftConfig{}).value, 0.0);
}

TEST(MagLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const dsp::StftConfig cfg;
  for (int inst = 0; inst < 20; ++inst) {
    const auto u = random_waveform(600, rng);
    const auto e = random_waveform(600, rng);
    const auto g = loss::mag_loss(e, u, cfg).grad.d_estimate;
    auto f = [&](const std::vector<double>& x) { return loss::mag_loss(x, u.samples, cfg).value; };
    EXPECT_LT(fd_max_rel_error(e.samples, g, f, rng, 20), 1e-4) << "instance " << inst;
  }
}

TEST(RecLoss, IsSumOfTermsWithSummedGradient) {
  Rng rng(8);
  const dsp::StftConfig cfg;
  const auto u = random_waveform(900, rng), e = random_waveform(900, rng);
  const auto r = loss::rec_loss(e, u, cfg);
  const auto si = loss::si_sdr_se_loss(e, u);
  const auto mg = loss::mag_loss(e, u, cfg);
  EXPECT_DOUBLE_EQ(r.report.total, si.value + mg.value);
  for (std::size_t i = 0; i < e.size(); ++i)
    EXPECT_NEAR(r.grad.d_estimate[i], si.grad.d_estimate[i] + mg.grad.d_estimate[i], 1e-15);
}

TEST(Stage2Loss, CombinesDistillationAndWeightedAuxiliary) {
  Rng rng(9);
  const dsp::StftConfig cfg;
  const auto e = random_waveform(900, rng), t = random_waveform(900, rng), y = random_waveform(900, rng);
  const double omega = 1.2;
  const auto l = loss::stage2_loss(e.view(), t.view(), y.view(), omega, cfg);
  const auto d = loss::rec_loss(e, t, cfg), a = loss::rec_loss(e, y, cfg);
  EXPECT_DOUBLE_EQ(l.report.distill, d.report.total);
  EXPECT_DOUBLE_EQ(l.report.aux, a.report.total);
  EXPECT_NEAR(l.report.total, d.report.total + omega * a.report.total, 1e-12);
  for (std::size_t i = 0; i < e.size(); ++i)
    EXPECT_NEAR(l.grad.d_estimate[i], d.grad.d_estimate[i] + omega * a.grad.d_estimate[i], 1e-14);
  EXPECT_THROW(loss::stage2_loss(e.view(), t.view(), y.view(), 0.0, cfg), ConfigError);
}

TEST(Stage2Loss, ReducesToRecLossWhenTeacherMatchesMixture) {
  Rng rng(10);
  const dsp::StftConfig cfg;
  const auto e = random_waveform(700, rng), y = random_waveform(700, rng);
  const double omega = 0.7;
  const auto l = loss::stage2_loss(e.view(), y.view(), y.view(), omega, cfg);
  EXPECT_NEAR(l.report.total, (1.0 + omega) * loss::rec_loss(e, y, cfg).report.total, 1e-12);
}

TEST(Stage2Loss, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  const dsp::StftConfig cfg;
  for (int inst = 0; inst < 20; ++inst) {
    const auto t = random_waveform(500, rng), y = random_waveform(500, rng);
    auto e = random_waveform(500, rng);
    for (std::size_t n = 0; n < e.size(); ++n) e[n] += 0.3 * t[n];
    const auto g = loss::stage2_loss(e.view(), t.view(), y.view(), 1.2, cfg).grad.d_estimate;
    auto f = [&](const std::vector<double>& x) { return loss::stage2_loss(x, t.view(), y.view(), 1.2, cfg).report.total; };
    EXPECT_LT(fd_max_rel_error(e.samples, g, f, rng, 15), 1e-4) << "instance " << inst;
  }
}

TEST(DistillOnlyLoss, DropsAuxiliaryTerm) {
  Rng rng(12);
  const dsp::StftConfig cfg;
  const auto e = random_waveform(600, rng), t = random_waveform(600, rng);
  const auto l = loss::distill_only_loss(e.view(), t.view(), cfg);
  EXPECT_DOUBLE_EQ(l.report.total, loss::rec_loss(e, t, cfg).report.total);
  EXPECT_EQ(l.report.aux, 0.0);
}
