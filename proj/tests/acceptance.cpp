// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only when all pass.
// Usage: artt_acceptance [--only 1,2,...] [--work DIR]
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "artt/data/sources.hpp"
#include "artt/dsp/stft.hpp"
#include "artt/io/wav.hpp"
#include "artt/loss/loss.hpp"
#include "artt/metrics/estoi.hpp"
#include "artt/metrics/si_sdr.hpp"
#include "artt/nn/optim.hpp"
#include "artt/rir/relative.hpp"
#include "artt/rir/room.hpp"
#include "artt/rir/statistical.hpp"
#include "artt/train/config.hpp"
#include "artt/train/trainer.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace artt;
using artt::testing::random_waveform;
using artt::testing::read_bytes;
using artt::testing::rel_l2;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(const std::string& cmd, std::string* out = nullptr) {
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return -1;
  std::array<char, 4096> buf;
  for (std::size_t n; (n = std::fread(buf.data(), 1, buf.size(), p)) > 0;)
    if (out) out->append(buf.data(), n);
  const int status = pclose(p);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli(const std::string& args) { return std::string(ARTT_CLI) + " " + args; }

// --- 1 ---------------------------------------------------------------------

Outcome stft_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  const dsp::StftConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto x = random_waveform(16000, rng);
    const auto back = dsp::istft(dsp::stft(x, cfg), x.size(), x.sample_rate);
    worst = std::max(worst, rel_l2(back.samples, x.samples));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0, fmt("max relative L2 error %.3g over 100 x 1 s (limit 1e-6), %.2f s (limit 10 s)", worst, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  nn::ModelConfig m;
  m.zero_output_init = false;
  const dsp::StftConfig sc;
  auto p = nn::init_params(m, rng);
  for (auto& t : p.tensors)
    if (t.is_vector)
      for (Eigen::Index i = 0; i < t.value.rows(); ++i) t.value(i, 0) = 0.05 * gaussian(rng);
  const std::size_t n = 4000;
  const auto in = random_waveform(n, rng), teacher = random_waveform(n, rng), y = random_waveform(n, rng);
  const double omega = 1.2;
  auto loss_at = [&] {
    const auto fr = nn::forward(p, m, dsp::stft(in, sc));
    return loss::stage2_loss(dsp::istft_samples(fr.estimate, n), teacher.view(), y.view(), omega, sc).report.total;
  };
  const auto fr = nn::forward(p, m, dsp::stft(in, sc));
  const auto l = loss::stage2_loss(dsp::istft_samples(fr.estimate, n), teacher.view(), y.view(), omega, sc);
  const auto g = train::detail::chain_backward(fr.tape, fr.estimate, l.grad.d_estimate);

  // Roundoff in the loss dominates below this step; truncation error is still negligible here.
  const double h = 1e-5;
  const int probes = 240;
  double worst = 0.0;
  int nonzero = 0;
  std::uniform_int_distribution<std::size_t> pick_t(0, p.size() - 1);
  for (int k = 0; k < probes; ++k) {
    const std::size_t ti = pick_t(rng);
    auto& val = p[ti].value;
    const Eigen::Index e = std::uniform_int_distribution<Eigen::Index>(0, val.size() - 1)(rng);
    const double keep = val.data()[e];
    val.data()[e] = keep + h;
    const double lp = loss_at();
    val.data()[e] = keep - h;
    const double lm = loss_at();
    val.data()[e] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = g[ti].value.data()[e];
    nonzero += an != 0.0;
    worst = std::max(worst, std::abs(fd - an) / std::max(1e-4, std::abs(fd) + std::abs(an)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 120.0,
          fmt("%d parameters (%d with non-zero gradient), max relative error %.3g (limit 1e-4), %.1f s (limit 120 s)",
              probes, nonzero, worst, secs)};
}

// --- 3 ---------------------------------------------------------------------

Outcome drr_by_construction() {
  Rng rng(303);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    rir::StatisticalRtfParams p;
    p.t60_s = uniform(rng, 0.5, 1.2);
    p.drr_db = uniform(rng, -16.0, -6.0);
    const auto h = rir::sample_statistical_rtf(p, rng);
    worst = std::max(worst, std::abs(rir::measure_drr(h) - p.drr_db));
  }
  return {worst < 1e-6, fmt("1000 filters, max |measured - requested| %.3g dB (limit 1e-6)", worst)};
}

// --- 4 ---------------------------------------------------------------------

Outcome relative_rir_consistency() {
  Rng rng(404);
  const rir::RoomSampleRanges ranges;
  double worst = 0.0;
  int warnings = 0;
  for (int i = 0; i < 100; ++i) {
    const auto room = rir::simulate_room(rir::sample_room_spec(ranges, rng));
    const auto rel = rir::relative_rir(room.full, room.direct);
    warnings += rel.meta.numerical_warning;
    const auto x = random_waveform(32000, rng);
    const auto target = dsp::convolve_trunc_first(x, room.full.taps);
    const auto via = dsp::convolve_trunc_first(dsp::convolve_trunc_first(x, room.direct.taps), rel.taps);
    worst = std::max(worst, rel_l2(via.samples, target.samples));
  }
  return {worst < 1e-2, fmt("100 rooms, max relative error %.3g (limit 1e-2), %d deconvolution warnings", worst, warnings)};
}

// --- 5 ---------------------------------------------------------------------

Outcome ema_contraction() {
  Rng rng(505);
  nn::ModelConfig m;
  m.freq_bins = 257;
  m.zero_output_init = false;
  const auto student = nn::init_params(m, rng);
  auto teacher = nn::init_params(m, rng);
  auto dist = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < student.size(); ++i) acc += (teacher[i].value - student[i].value).squaredNorm();
    return std::sqrt(acc);
  };
  const double alpha = 0.999, d0 = dist();
  double worst = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    nn::ema_update(teacher, student, alpha);
    worst = std::max(worst, std::abs(dist() / (std::pow(alpha, k) * d0) - 1.0));
  }
  return {worst < 1e-9, fmt("k = 1..1000, alpha 0.999, max relative deviation %.3g (limit 1e-9)", worst)};
}

// --- 6 ---------------------------------------------------------------------

Outcome metric_sanity() {
  Rng rng(606);
  const auto ref = data::generate_toy_source(3.0, rng);
  const double cap = metrics::si_sdr_metric(ref, ref);

  auto n = random_waveform(ref.size(), rng);
  const double proj = dsp::dot(n.samples, ref.samples) / dsp::energy(ref.samples);
  for (std::size_t k = 0; k < n.size(); ++k) n[k] -= proj * ref[k];
  const double s = std::sqrt(dsp::energy(ref.samples) / dsp::energy(n.samples));
  auto est = ref;
  for (std::size_t k = 0; k < n.size(); ++k) est[k] += s * n[k];
  const double ortho = metrics::si_sdr_metric(est, ref);
  const double self = metrics::estoi(ref, ref);

  const fs::path dir = fs::path(ARTT_FIXTURE_DIR) / "estoi";
  std::ifstream in(dir / "scores.json");
  const auto scores = nlohmann::json::parse(in);
  double worst = 0.0;
  for (const auto& sc : scores) {
    const std::string pair = sc.at("pair");
    const double got = metrics::estoi(io::read_wav(dir / (pair + "_est.wav")), io::read_wav(dir / (pair + "_ref.wav")));
    worst = std::max(worst, std::abs(got - sc.at("estoi").get<double>()));
  }
  const bool pass = cap == metrics::kSiSdrCapDb && std::abs(ortho) < 1e-9 && std::abs(self - 1.0) < 1e-6 &&
                    scores.size() == 10 && worst < 5e-3;
  return {pass, fmt("self SI-SDR %.1f dB, orthogonal %.2g dB, self eSTOI %.9f, fixture max deviation %.2g over %zu pairs (limit 5e-3)",
                    cap, ortho, self, worst, scores.size())};
}

// --- 7, 8, 9 ---------------------------------------------------------------

// Toy experiment settings. Seed 7, 200 train / 20 test utterances of 4 s.
train::TrainConfig toy_config(int steps) {
  train::TrainConfig c;
  c.seed = 7;
  c.steps = steps;
  c.batch_size = 4;
  c.crop_len_s = 1.0;
  c.checkpoint_every = steps;
  c.model.hidden = 128;
  c.stage2.room_pool = 200;
  return c;
}

constexpr int kStage1Steps = 1000;
constexpr int kStage2Steps = 500;

void write_config(const fs::path& path, const train::TrainConfig& c) {
  std::ofstream out(path, std::ios::trunc);
  out << train::echo_config(c);
}

struct EvalSummary {
  double mean = 0.0;
  std::vector<std::pair<std::size_t, double>> buckets;  // (count, mean)
  std::size_t count = 0;
};

class Toy {
 public:
  explicit Toy(fs::path work) : work_(std::move(work)) {}

  // Runs the whole pipeline once; later criteria reuse the results.
  bool prepare(std::string& err) {
    if (prepared_) return ok_;
    prepared_ = true;
    const auto t0 = std::chrono::steady_clock::now();
    fs::remove_all(work_);
    fs::create_directories(work_);
    if (run(cli("synth-data --out " + (work_ / "data").string() + " --train 200 --val 0 --test 20 --duration 4 --seed 7") +
            " > /dev/null") != 0)
      return fail(err, "synth-data failed");
    manifest_ = (work_ / "data" / "manifest.jsonl").string();

    write_config(work_ / "stage1.cfg", toy_config(kStage1Steps));
    auto s2 = toy_config(kStage2Steps);
    write_config(work_ / "stage2_full.cfg", s2);
    s2.stage2.use_aux = false;
    write_config(work_ / "stage2_no_aux.cfg", s2);
    s2 = toy_config(kStage2Steps);
    s2.stage2.noise_factor = 0.0;
    write_config(work_ / "stage2_no_noise.cfg", s2);

    if (!train("1", "stage1.cfg", "")) return fail(err, "stage 1 training failed");
    const auto init = (work_ / "stage1" / "final.artt").string();
    for (const char* v : {"stage2_full", "stage2_no_aux", "stage2_no_noise"})
      if (!train("2", std::string(v) + ".cfg", init)) return fail(err, std::string(v) + " training failed");

    if (!evaluate("mixture", "", mixture_)) return fail(err, "mixture evaluation failed");
    if (!evaluate("stage1", init, stage1_)) return fail(err, "stage 1 evaluation failed");
    for (const char* v : {"stage2_full", "stage2_no_aux", "stage2_no_noise"})
      if (!evaluate(v, (work_ / v / "final.artt").string(), stage2_[v])) return fail(err, std::string(v) + " evaluation failed");
    seconds_ = seconds_since(t0);
    ok_ = true;
    return true;
  }

  double seconds() const { return seconds_; }
  const EvalSummary& mixture() const { return mixture_; }
  const EvalSummary& stage1() const { return stage1_; }
  const EvalSummary& stage2(const std::string& v) const { return stage2_.at(v); }

 private:
  bool fail(std::string& err, const std::string& what) {
    err = what;
    ok_ = false;
    return false;
  }

  bool train(const std::string& stage, const std::string& cfg, const std::string& init) {
    const std::string name = cfg.substr(0, cfg.size() - 4);
    std::string cmd = cli("train --quiet --stage " + stage + " --config " + (work_ / cfg).string() + " --manifest " +
                          manifest_ + " --out " + (work_ / name).string());
    if (!init.empty()) cmd += " --init " + init;
    std::fprintf(stderr, "[acceptance] training %s\n", name.c_str());
    return run(cmd + " > /dev/null") == 0;
  }

  bool evaluate(const std::string& name, const std::string& ckpt, EvalSummary& s) {
    std::string out;
    std::string cmd = cli("eval --by-snr --manifest " + manifest_ + " --report " + (work_ / (name + ".csv")).string());
    cmd += ckpt.empty() ? " --net mixture" : " --net student --ckpt " + ckpt;
    if (run(cmd, &out) != 0) return false;
    const auto j = nlohmann::json::parse(out).at("nets").at(0);
    s.mean = j.at("mean_si_sdr_db").get<double>();
    s.count = j.at("count").get<std::size_t>();
    for (const auto& b : j.at("snr_buckets")) s.buckets.emplace_back(b.at("count").get<std::size_t>(), b.at("mean_si_sdr_db").get<double>());
    return true;
  }

  fs::path work_;
  std::string manifest_;
  bool prepared_ = false, ok_ = false;
  double seconds_ = 0.0;
  EvalSummary mixture_, stage1_;
  std::map<std::string, EvalSummary> stage2_;
};

Outcome toy_trend(Toy& toy) {
  std::string err;
  if (!toy.prepare(err)) return {false, err};
  const double mix = toy.mixture().mean, s1 = toy.stage1().mean, s2 = toy.stage2("stage2_full").mean;
  const bool pass = s1 >= mix + 1.0 && s2 >= s1 + 0.5 && toy.seconds() <= 7200.0;
  return {pass, fmt("test SI-SDR mixture %.2f dB, stage 1 %.2f dB (needs >= %.2f), stage 2 %.2f dB (needs >= %.2f); "
                    "%d + %d steps, pipeline %.0f s (limit 7200 s)",
                    mix, s1, mix + 1.0, s2, s1 + 0.5, kStage1Steps, kStage2Steps, toy.seconds())};
}

Outcome toy_ablation(Toy& toy) {
  std::string err;
  if (!toy.prepare(err)) return {false, err};
  const double full = toy.stage2("stage2_full").mean, no_aux = toy.stage2("stage2_no_aux").mean,
               no_noise = toy.stage2("stage2_no_noise").mean;
  return {full > no_aux && full > no_noise,
          fmt("full %.3f dB, without auxiliary term %.3f dB, without noise injection %.3f dB", full, no_aux, no_noise)};
}

Outcome snr_buckets(Toy& toy) {
  std::string err;
  if (!toy.prepare(err)) return {false, err};
  double worst = 0.0;
  for (const EvalSummary* s : {&toy.mixture(), &toy.stage1(), &toy.stage2("stage2_full")}) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& [c, m] : s->buckets) acc += c * m, n += c;
    worst = std::max(worst, n == s->count ? std::abs(acc / n - s->mean) : 1e9);
  }
  auto min_bucket = [](const EvalSummary& s) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [c, v] : s.buckets)
      if (c > 0) m = std::min(m, v);
    return m;
  };
  const double m1 = min_bucket(toy.stage1()), m2 = min_bucket(toy.stage2("stage2_full"));
  std::string counts;
  for (const auto& [c, v] : toy.stage1().buckets) counts += (counts.empty() ? "" : "/") + std::to_string(c);
  return {worst < 1e-9 && toy.stage1().buckets.size() == 4 && m2 >= m1,
          fmt("bucket counts %s, recombination error %.2g (limit 1e-9), min bucket mean stage 1 %.3f dB, stage 2 %.3f dB",
              counts.c_str(), worst, m1, m2)};
}

// --- 10 --------------------------------------------------------------------

Outcome determinism(const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  if (run(cli("synth-data --out " + (dir / "data").string() + " --train 8 --val 0 --test 0 --duration 2 --seed 11") +
          " > /dev/null") != 0)
    return {false, "synth-data failed"};
  const std::string manifest = (dir / "data" / "manifest.jsonl").string();
  write_config(dir / "run.cfg", toy_config(30));
  for (const char* r : {"a", "b"}) {
    const std::string cmd = cli("train --quiet --stage 1 --jobs 1 --config " + (dir / "run.cfg").string() + " --manifest " +
                                manifest + " --out " + (dir / r).string());
    if (run(cmd + " > /dev/null") != 0) return {false, "training run failed"};
  }
  const bool ck = read_bytes(dir / "a" / "final.artt") == read_bytes(dir / "b" / "final.artt");
  const bool log = read_bytes(dir / "a" / "loss_log.csv") == read_bytes(dir / "b" / "loss_log.csv");
  return {ck && log, fmt("two 30-step runs: checkpoints %s, loss logs %s", ck ? "identical" : "DIFFER", log ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::current_path() / "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--work DIR]\n", argv[0]);
      return 2;
    }
  }

  Toy toy(work / "toy");
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"STFT round trip", stft_round_trip},
      {"full-chain gradient", gradient_check},
      {"statistical filter DRR", drr_by_construction},
      {"relative RIR consistency", relative_rir_consistency},
      {"EMA contraction", ema_contraction},
      {"metric sanity", metric_sanity},
      {"toy two-stage trend", [&] { return toy_trend(toy); }},
      {"toy stage-2 ablation", [&] { return toy_ablation(toy); }},
      {"SNR buckets", [&] { return snr_buckets(toy); }},
      {"stage-1 determinism", [&] { return determinism(work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
