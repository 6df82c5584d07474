#include <gtest/gtest.h>

#include <cstring>

#include "artt/data/dataset.hpp"
#include "artt/dsp/fft.hpp"
#include "artt/metrics/si_sdr.hpp"
#include "support.hpp"

using namespace artt;
using artt::testing::TempDir;

namespace {

template <class T>
void put(std::string& s, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  s.append(b, sizeof(T));
}

// Hand-assembled PCM16 WAV with `ch` interleaved channels; channel c holds value (c + 1) * k / 1000.
std::string multichannel_pcm16(int ch, int frames, bool extensible) {
  std::string fmt;
  put<std::uint16_t>(fmt, extensible ? 0xFFFE : 1);
  put<std::uint16_t>(fmt, static_cast<std::uint16_t>(ch));
  put<std::uint32_t>(fmt, 16000);
  put<std::uint32_t>(fmt, 16000u * 2 * ch);
  put<std::uint16_t>(fmt, static_cast<std::uint16_t>(2 * ch));
  put<std::uint16_t>(fmt, 16);
  if (extensible) {
    put<std::uint16_t>(fmt, 22);
    put<std::uint16_t>(fmt, 16);
    put<std::uint32_t>(fmt, 0);
    put<std::uint16_t>(fmt, 1);  // PCM subformat GUID prefix
    fmt.append(14, '\0');
  }
  std::string data;
  for (int k = 0; k < frames; ++k)
    for (int c = 0; c < ch; ++c) put<std::int16_t>(data, static_cast<std::int16_t>((c + 1) * k));
  std::string out = "RIFF";
  put<std::uint32_t>(out, static_cast<std::uint32_t>(4 + 8 + fmt.size() + 8 + 8 + 4 + data.size()));
  out += "WAVE";
  out += "fmt ";
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fmt.size()));
  out += fmt;
  out += "LIST";  // unknown chunk that must be skipped
  put<std::uint32_t>(out, 4);
  out += "abcd";
  out += "data";
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  out += data;
  return out;
}

}  // namespace

TEST(Wav, Float32RoundTripIsBitExact) {
  TempDir dir("artt_wav");
  Rng rng(1);
  auto w = artt::testing::random_waveform(3000, rng);
  for (auto& v : w.samples) v = static_cast<float>(v);
  io::write_wav(dir / "a.wav", w);
  io::WavInfo info;
  const auto back = io::read_wav(dir / "a.wav", &info);
  EXPECT_EQ(back.samples, w.samples);
  EXPECT_EQ(info.format, io::SampleFormat::kFloat32);
  EXPECT_EQ(info.channels, 1);
  EXPECT_EQ(back.sample_rate, 16000);
}

TEST(Wav, Pcm16RoundTripWithinOneStep) {
  TempDir dir("artt_wav");
  Rng rng(2);
  auto w = artt::testing::random_waveform(3000, rng, 0.3);
  w[0] = 0.999999;
  w[1] = -1.0;
  io::write_wav(dir / "a.wav", w, io::SampleFormat::kPcm16);
  const auto back = io::read_wav(dir / "a.wav");
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(back[i] - w[i]));
  EXPECT_LE(worst, std::ldexp(1.0, -15));
}

TEST(Wav, MultichannelYieldsFirstChannel) {
  TempDir dir("artt_wav");
  for (bool ext : {false, true}) {
    artt::testing::write_bytes(dir / "m.wav", multichannel_pcm16(8, 50, ext));
    io::WavInfo info;
    const auto w = io::read_wav(dir / "m.wav", &info);
    EXPECT_EQ(info.channels, 8);
    ASSERT_EQ(w.size(), 50u);
    for (int k = 0; k < 50; ++k) EXPECT_EQ(w[k], k / 32768.0);
  }
}

TEST(Wav, MalformedFilesRaiseFormatError) {
  TempDir dir("artt_wav");
  const auto p = dir / "bad.wav";
  const std::string good = multichannel_pcm16(1, 10, false);
  for (const std::string& bytes : {std::string("RIFX1234WAVE"), good.substr(0, 20), good.substr(0, good.size() - 6)}) {
    artt::testing::write_bytes(p, bytes);
    EXPECT_THROW(io::read_wav(p), FormatError);
  }
  std::string bits8 = good;
  bits8[34] = 8;  // bits per sample
  artt::testing::write_bytes(p, bits8);
  EXPECT_THROW(io::read_wav(p), FormatError);
  EXPECT_THROW(io::read_wav(dir / "none.wav"), FormatError);
}

TEST(Sources, DeterministicPerSeed) {
  Rng a(5), b(5), c(6);
  const auto x = data::generate_toy_source(2.0, a);
  EXPECT_EQ(x.samples, data::generate_toy_source(2.0, b).samples);
  EXPECT_NE(x.samples, data::generate_toy_source(2.0, c).samples);
  EXPECT_NEAR(dsp::peak_abs(x.samples), 0.5, 1e-12);
}

TEST(Sources, SilenceFractionWithinBounds) {
  Rng rng(7);
  for (const auto& x : data::generate_toy_sources(20, 4.0, rng)) {
    const double s = data::silence_fraction(x);
    EXPECT_GE(s, 0.15);
    EXPECT_LE(s, 0.5);
  }
}

TEST(Sources, SpectrumIsLowPassTilted) {
  Rng rng(8);
  double low = 0.0, high = 0.0;
  const int n = 1 << 16;
  dsp::RealFft fft(n);
  std::vector<dsp::cplx> spec(n / 2 + 1);
  for (const auto& x : data::generate_toy_sources(10, 4.0, rng)) {
    std::vector<double> buf(n, 0.0);
    std::copy(x.samples.begin(), x.samples.end(), buf.begin());
    fft.forward(buf, spec);
    for (int k = 0; k <= n / 2; ++k) {
      const double f = k * 16000.0 / n;
      if (f < 1000.0) low += std::norm(spec[k]);
      if (f > 4000.0) high += std::norm(spec[k]);
    }
  }
  EXPECT_GT(low, high);
}

TEST(Mixture, SnrIsExactAndComponentsDecompose) {
  Rng rng(9);
  const auto x = data::generate_toy_source(2.0, rng);
  for (double snr : {5.0, 13.3, 25.0}) {
    data::MixtureSpec spec;
    spec.snr_db = snr;
    spec.seed = 42;
    const auto m = data::synthesize_mixture(x, spec);
    EXPECT_NEAR(10.0 * std::log10(dsp::energy(m.reverberant.samples) / dsp::energy(m.noise.samples)), snr, 1e-6);
    const auto rev = dsp::convolve_trunc_first(x, rir::simulate_room(spec.room).full.taps);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(m.y[i] / m.meta.gain - m.noise[i], rev[i], 1e-12);
    }
    EXPECT_NEAR(dsp::peak_abs(m.y.samples), 0.9, 1e-12);
    EXPECT_LT(metrics::si_sdr_metric(m.y, m.reference), metrics::si_sdr_metric(m.reference, m.reference));
  }
}

TEST(Mixture, AnechoicRoomLeavesReferencePlusNoise) {
  Rng rng(10);
  const auto x = data::generate_toy_source(1.0, rng);
  data::MixtureSpec spec;
  spec.room.absorption = 1.0;
  const auto m = data::synthesize_mixture(x, spec);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(m.y[i], m.reference[i] + m.meta.gain * m.noise[i], 1e-12);
}

TEST(Mixture, RejectsSilenceAndOutOfRangeSnr) {
  data::MixtureSpec spec;
  EXPECT_THROW(data::synthesize_mixture(dsp::Waveform::zeros(1000), spec), InputError);
  Rng rng(11);
  const auto x = data::generate_toy_source(1.0, rng);
  for (double snr : {4.9, 25.1, std::numeric_limits<double>::infinity()}) {
    spec.snr_db = snr;
    EXPECT_THROW(data::synthesize_mixture(x, spec), ConfigError);
  }
}

TEST(Manifest, RoundTripPreservesFields) {
  TempDir dir("artt_manifest");
  std::vector<data::ManifestRow> rows(3);
  rows[0] = {"a", "mix/a.wav", "ref/a.wav", 7.123456789012345, 0.61, data::Split::kTrain};
  rows[1] = {"b", "/abs/b.wav", std::nullopt, std::nullopt, std::nullopt, data::Split::kVal};
  rows[2] = {"c", "mix/c.wav", "ref/c.wav", 24.999999999999996, std::nullopt, data::Split::kTest};
  data::write_manifest(dir / "m.jsonl", rows);
  const auto m = data::read_manifest(dir / "m.jsonl");
  EXPECT_EQ(m.rows, rows);
  EXPECT_EQ(m.resolve("mix/a.wav"), dir.path() / "mix/a.wav");
  EXPECT_EQ(m.resolve("/abs/b.wav"), std::filesystem::path("/abs/b.wav"));
  EXPECT_EQ(m.select(data::Split::kTest).size(), 1u);
  EXPECT_EQ(m.select(std::nullopt).size(), 3u);
}

TEST(Manifest, RejectsDuplicatesAndMalformedRows) {
  TempDir dir("artt_manifest");
  artt::testing::write_bytes(dir / "d.jsonl",
                             "{\"utt_id\":\"a\",\"mixture_path\":\"x.wav\"}\n{\"utt_id\":\"a\",\"mixture_path\":\"y.wav\"}\n");
  try {
    data::read_manifest(dir / "d.jsonl");
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate utt_id"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  artt::testing::write_bytes(dir / "e.jsonl", "{\"utt_id\":\"a\"}\n");
  EXPECT_THROW(data::read_manifest(dir / "e.jsonl"), FormatError);
  artt::testing::write_bytes(dir / "f.jsonl", "{\"utt_id\":\"a\",\"mixture_path\":\"x\",\"split\":\"dev\"}\n");
  EXPECT_THROW(data::read_manifest(dir / "f.jsonl"), FormatError);
}

TEST(Dataset, RowsFilesAndDeterminism) {
  TempDir a("artt_ds_a"), b("artt_ds_b");
  data::DatasetOptions opt;
  opt.duration_s = 1.0;
  const data::SplitCounts counts{4, 2, 3};
  const auto m = data::build_dataset(a.path(), counts, opt, 7);
  opt.jobs = 3;
  const auto m2 = data::build_dataset(b.path(), counts, opt, 7);
  ASSERT_EQ(m.rows.size(), 9u);
  std::set<std::string> ids;
  for (const auto& r : m.rows) ids.insert(r.utt_id);
  EXPECT_EQ(ids.size(), 9u);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& r = m.rows[i];
    ASSERT_TRUE(r.reference_path && r.input_snr_db);
    EXPECT_GE(*r.input_snr_db, 5.0);
    EXPECT_LE(*r.input_snr_db, 25.0);
    EXPECT_EQ(artt::testing::read_bytes(m.resolve(r.mixture_path)), artt::testing::read_bytes(m2.resolve(r.mixture_path)));
    EXPECT_EQ(artt::testing::read_bytes(m.resolve(*r.reference_path)),
              artt::testing::read_bytes(m2.resolve(*r.reference_path)));
    const auto y = io::read_wav(m.resolve(r.mixture_path));
    const auto x = io::read_wav(m.resolve(*r.reference_path));
    EXPECT_EQ(y.size(), 16000u);
    EXPECT_LT(metrics::si_sdr_metric(y, x), metrics::kSiSdrCapDb);
  }
  EXPECT_EQ(artt::testing::read_bytes(a / "manifest.jsonl"), artt::testing::read_bytes(b / "manifest.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(a / "test/mix/test_0002.wav"));
}

TEST(Dataset, SplitsAreIndependentOfOtherCounts) {
  data::DatasetOptions opt;
  opt.duration_s = 0.5;
  const auto a = data::make_utterance(3, data::Split::kTest, 1, opt);
  const auto b = data::make_utterance(3, data::Split::kTest, 1, opt);
  const auto c = data::make_utterance(3, data::Split::kTrain, 1, opt);
  EXPECT_EQ(a.y.samples, b.y.samples);
  EXPECT_NE(a.y.samples, c.y.samples);
}
