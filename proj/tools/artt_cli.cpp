// artt: dataset synthesis, RIR export, two-stage training, enhancement,
// evaluation and spectrogram export.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "artt/data/dataset.hpp"
#include "artt/eval/evaluate.hpp"
#include "artt/io/pgm.hpp"
#include "artt/io/wav.hpp"
#include "artt/rir/analysis.hpp"
#include "artt/rir/room.hpp"
#include "artt/rir/statistical.hpp"
#include "artt/train/config.hpp"
#include "artt/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace artt;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct SynthArgs {
  std::string out;
  int train = 200, val = 20, test = 20;
  std::uint64_t seed = 7;
  double duration = 4.0;
  int jobs = 1;
};

struct RirArgs {
  std::string mode, out, direct_out;
  double t60 = 0.8;
  std::optional<double> drr;
  std::uint64_t seed = 1;
  int fs = dsp::kDefaultSampleRate;
};

struct TrainArgs {
  int stage = 1;
  std::string config, manifest, init, out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool quiet = false;
};

struct EnhanceArgs {
  std::string ckpt, in, out, net = "student";
};

struct EvalArgs {
  std::string ckpt, manifest, report, summary, net = "student", split = "test";
  bool by_snr = false;
  int jobs = 1;
};

struct SpecArgs {
  std::string in, out;
  double db_floor = -80.0;
};

int run_synth(const SynthArgs& a) {
  data::SplitCounts counts{a.train, a.val, a.test};
  data::DatasetOptions opt;
  opt.duration_s = a.duration;
  opt.jobs = a.jobs;
  const auto m = data::build_dataset(a.out, counts, opt, a.seed);
  std::printf("wrote %zu utterances and %s\n", m.rows.size(), (fs::path(a.out) / "manifest.jsonl").c_str());
  return kOk;
}

int run_rir(const RirArgs& a) {
  if (!(a.t60 > 0.0)) throw ConfigError("rir: --t60 must be positive");
  if (a.mode == "statistical") {
    rir::StatisticalRtfParams p;
    p.t60_s = a.t60;
    p.drr_db = a.drr.value_or(-10.0);
    p.sample_rate = a.fs;
    auto rng = substream(a.seed, {tag(Stream::kRir)});
    const auto h = rir::sample_statistical_rtf(p, rng);
    io::write_wav(a.out, h.taps);
    std::printf("statistical t60_s=%.6g drr_db=%.9f taps=%zu\n", a.t60, rir::measure_drr(h), h.taps.size());
    return kOk;
  }
  if (a.drr) throw ConfigError("rir: --drr applies to --mode statistical only");
  rir::RoomSampleRanges ranges;
  ranges.t60_s = {a.t60, a.t60};
  auto rng = substream(a.seed, {tag(Stream::kRoom)});
  const auto spec = rir::sample_room_spec(ranges, rng, a.fs);
  const auto room = rir::simulate_room(spec);
  io::write_wav(a.out, room.full.taps);
  if (!a.direct_out.empty()) io::write_wav(a.direct_out, room.direct.taps);
  const auto t60 = rir::schroeder_t60(room.full.taps);
  std::printf("room %.3gx%.3gx%.3g m distance_m=%.4f t60_s=%.4f measured_t60_s=%s drr_db=%.4f taps=%zu\n",
              spec.length_m, spec.width_m, spec.height_m, rir::distance(spec.src_pos, spec.mic_pos), spec.t60_s,
              t60 ? std::to_string(*t60).c_str() : "n/a", rir::measure_drr_windowed(room.full),
              room.full.taps.size());
  return kOk;
}

int run_train(const TrainArgs& a) {
  train::TrainConfig cfg = a.config.empty() ? train::TrainConfig{} : train::load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  cfg.model.freq_bins = cfg.fft_len / 2 + 1;
  cfg.validate();
  if (a.stage == 2 && a.init.empty()) throw ConfigError("train: --stage 2 requires --init CKPT");
  if (a.stage == 1 && !a.init.empty()) throw ConfigError("train: --init applies to --stage 2 only");
  const auto manifest = data::read_manifest(a.manifest);
  const auto ts = train::load_training_set(manifest);
  fs::create_directories(a.out);
  {
    std::ofstream out(fs::path(a.out) / "config.txt", std::ios::trunc);
    out << train::echo_config(cfg);
    if (!out) throw FormatError("cannot write " + (fs::path(a.out) / "config.txt").string());
  }
  train::TrainOptions opt;
  opt.jobs = a.jobs;
  const int every = std::max(1, cfg.steps / 20);
  if (!a.quiet)
    opt.on_step = [&](int step, const loss::LossReport& r) {
      if (step % every == 0 || step == cfg.steps)
        std::fprintf(stderr, "step %d/%d loss %.4f\n", step, cfg.steps, r.total);
    };
  fs::path final_path;
  if (a.stage == 1) {
    final_path = train::train_stage1(ts, cfg, a.out, opt);
  } else {
    const auto init = nn::load_checkpoint(a.init);
    final_path = train::train_stage2(ts, cfg, init, a.out, opt);
  }
  std::printf("%s\n", final_path.c_str());
  return kOk;
}

int run_enhance(const EnhanceArgs& a) {
  const auto ck = nn::load_checkpoint(a.ckpt);
  const auto net = eval::parse_net(a.net);
  if (net == eval::Net::kMixture) throw ConfigError("enhance: --net must be student or teacher");
  const auto y = io::read_wav(a.in);
  io::write_wav(a.out, train::enhance(ck, y, net == eval::Net::kTeacher));
  return kOk;
}

int run_eval(const EvalArgs& a) {
  eval::EvalOptions opt;
  opt.by_snr_buckets = a.by_snr;
  opt.jobs = a.jobs;
  if (a.net == "both") opt.nets = {eval::Net::kStudent, eval::Net::kTeacher};
  else opt.nets = {eval::parse_net(a.net)};
  if (a.split == "all") opt.split.reset();
  else opt.split = data::parse_split(a.split);
  std::optional<nn::Checkpoint> ck;
  if (!a.ckpt.empty()) ck = nn::load_checkpoint(a.ckpt);
  const auto m = data::read_manifest(a.manifest);
  const auto rep = eval::evaluate_set(ck ? &*ck : nullptr, m, opt);
  eval::write_csv(a.report, rep);
  const std::string summary = eval::summary_json(rep).dump(2);
  std::printf("%s\n", summary.c_str());
  if (!a.summary.empty()) {
    std::ofstream out(a.summary, std::ios::trunc);
    out << summary << '\n';
    if (!out) throw FormatError("cannot write " + a.summary);
  }
  for (const auto& w : rep.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (!rep.skipped.empty()) {
    std::fprintf(stderr, "error: partial evaluation, %zu utterance(s) skipped (first: %s)\n", rep.skipped.size(),
                 rep.skipped.front().c_str());
    return kRuntime;
  }
  return kOk;
}

int run_spectrogram(const SpecArgs& a) {
  const auto w = io::read_wav(a.in);
  io::write_pgm(a.out, io::spectrogram_image(dsp::stft(w, dsp::StftConfig{}), a.db_floor));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised two-stage speech dereverberation toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth-data", "Generate a toy dataset and manifest");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--train", synth.train, "Training utterances")->capture_default_str();
  c_synth->add_option("--val", synth.val, "Validation utterances")->capture_default_str();
  c_synth->add_option("--test", synth.test, "Test utterances")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  c_synth->add_option("--duration", synth.duration, "Utterance length in seconds")->capture_default_str();
  c_synth->add_option("--jobs", synth.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  RirArgs rir_a;
  auto* c_rir = app.add_subcommand("rir", "Export a statistical or simulated room impulse response");
  c_rir->add_option("--mode", rir_a.mode, "statistical | room")
      ->required()
      ->check(CLI::IsMember({"statistical", "room"}));
  c_rir->add_option("--t60", rir_a.t60, "Reverberation time in seconds")->capture_default_str();
  c_rir->add_option("--drr", rir_a.drr, "Direct-to-reverberant ratio in dB (statistical, default -10)");
  c_rir->add_option("--seed", rir_a.seed, "Seed")->capture_default_str();
  c_rir->add_option("--fs", rir_a.fs, "Sample rate")->capture_default_str()->check(CLI::PositiveNumber);
  c_rir->add_option("--out", rir_a.out, "Output WAV")->required();
  c_rir->add_option("--direct-out", rir_a.direct_out, "Direct-path WAV (room mode)");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train stage 1 or stage 2");
  c_train->add_option("--stage", tr.stage, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  c_train->add_option("--config", tr.config, "key = value config file")->check(CLI::ExistingFile);
  c_train->add_option("--manifest", tr.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c_train->add_option("--init", tr.init, "Stage-1 checkpoint (stage 2)")->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out, "Run directory")->required();
  c_train->add_option("--seed", tr.seed, "Overrides the config seed");
  c_train->add_option("--jobs", tr.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  c_train->add_flag("--quiet", tr.quiet, "No progress output");

  EnhanceArgs en;
  auto* c_enh = app.add_subcommand("enhance", "Dereverberate one WAV file");
  c_enh->add_option("--ckpt", en.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_enh->add_option("--in", en.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_enh->add_option("--out", en.out, "Output WAV")->required();
  c_enh->add_option("--net", en.net, "student | teacher")
      ->capture_default_str()
      ->check(CLI::IsMember({"student", "teacher"}));

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score a checkpoint on a manifest split");
  c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint (not needed for --net mixture)")->check(CLI::ExistingFile);
  c_eval->add_option("--manifest", ev.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--report", ev.report, "Per-utterance CSV")->required();
  c_eval->add_option("--summary", ev.summary, "Also write the summary JSON here");
  c_eval->add_flag("--by-snr", ev.by_snr, "Bucket means by input SNR");
  c_eval->add_option("--net", ev.net, "student | teacher | mixture | both")
      ->capture_default_str()
      ->check(CLI::IsMember({"student", "teacher", "mixture", "both"}));
  c_eval->add_option("--split", ev.split, "train | val | test | all")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  c_eval->add_option("--jobs", ev.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  SpecArgs sp;
  auto* c_spec = app.add_subcommand("spectrogram", "Write a log-magnitude spectrogram as a PGM image");
  c_spec->add_option("--in", sp.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_spec->add_option("--out", sp.out, "Output PGM")->required();
  c_spec->add_option("--db-floor", sp.db_floor, "Lowest displayed level in dB")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_rir->parsed()) return run_rir(rir_a);
    if (c_train->parsed()) return run_train(tr);
    if (c_enh->parsed()) return run_enhance(en);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_spec->parsed()) return run_spectrogram(sp);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
