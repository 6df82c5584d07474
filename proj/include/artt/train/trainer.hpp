#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "artt/data/manifest.hpp"
#include "artt/dsp/convolve.hpp"
#include "artt/io/wav.hpp"
#include "artt/loss/loss.hpp"
#include "artt/nn/checkpoint.hpp"
#include "artt/parallel.hpp"
#include "artt/rir/relative.hpp"
#include "artt/rir/statistical.hpp"
#include "artt/train/config.hpp"

namespace artt::train {

struct TrainOptions {
  int jobs = 1;
  // Called after every step with (step, report); may be empty.
  std::function<void(int, const loss::LossReport&)> on_step;
};

/// Observed mixtures of the training split, held in memory.
struct TrainingSet {
  std::vector<dsp::Waveform> items;
  int sample_rate = dsp::kDefaultSampleRate;
};

inline TrainingSet load_training_set(const data::Manifest& m) {
  auto rows = m.select(data::Split::kTrain);
  if (rows.empty()) throw ConfigError("training manifest has no train rows");
  TrainingSet ts;
  for (const auto* r : rows) {
    auto w = io::read_wav(m.resolve(r->mixture_path));
    if (ts.items.empty()) ts.sample_rate = w.sample_rate;
    else if (w.sample_rate != ts.sample_rate) throw ConfigError("training set mixes sample rates");
    ts.items.push_back(std::move(w));
  }
  return ts;
}

namespace detail {

inline std::uint64_t u(int v) { return static_cast<std::uint64_t>(v); }

// Which utterance and where the crop starts; one substream each.
struct Crop {
  std::size_t item = 0;
  std::size_t start = 0;
  bool padded = false;
};

inline Crop pick_crop(const TrainingSet& ts, std::uint64_t seed, int step, int b, std::size_t crop_len) {
  Crop c;
  auto rb = substream(seed, {tag(Stream::kBatch), u(step), u(b)});
  c.item = std::uniform_int_distribution<std::size_t>(0, ts.items.size() - 1)(rb);
  const std::size_t n = ts.items[c.item].size();
  auto rc = substream(seed, {tag(Stream::kCrop), u(step), u(b)});
  if (n > crop_len) c.start = std::uniform_int_distribution<std::size_t>(0, n - crop_len)(rc);
  c.padded = n < crop_len;
  return c;
}

// Samples [start, start+len) of y * h (convolution truncated to len(y)),
// computed from the part of y that can reach the window.
inline dsp::Waveform filtered_crop(const dsp::Waveform& y, const dsp::Waveform& h, std::size_t start,
                                   std::size_t len) {
  const std::size_t from = start >= h.size() ? start - h.size() + 1 : 0;
  const std::size_t end = std::min(y.size(), start + len);
  dsp::Waveform seg = dsp::slice(y, from, end - from);
  auto z = dsp::convolve(seg.samples, h.samples, seg.size());
  dsp::Waveform out = dsp::Waveform::zeros(len, y.sample_rate);
  for (std::size_t i = start; i < end; ++i) out[i - start] = z[i - from];
  return out;
}

inline dsp::Waveform run_model(const nn::ParamSet& p, const nn::ModelConfig& cfg, const dsp::StftConfig& stft,
                               const dsp::Waveform& in) {
  auto fr = nn::forward(p, cfg, dsp::stft(in, stft));
  return dsp::istft(fr.estimate, in.size(), in.sample_rate);
}

// Parameter gradient of a loss whose estimate-gradient is `d_est`.
inline nn::ParamSet chain_backward(const nn::Tape& tape, const dsp::ComplexSpectrogram& est_spec,
                                   const std::vector<double>& d_est) {
  const auto d_spec = dsp::istft_adjoint(d_est, est_spec.num_frames, est_spec.config, est_spec.origin_len);
  return nn::backward(tape, d_spec);
}

struct ItemResult {
  loss::LossReport report;
  nn::ParamSet grad;
  bool padded = false;
  int room_retries = 0;
};

inline bool finite_report(const loss::LossReport& r) {
  return std::isfinite(r.total) && std::isfinite(r.si_sdr_se) && std::isfinite(r.mag);
}

class RunLog {
 public:
  RunLog(const std::filesystem::path& dir, bool stage2) : loss_(dir / "loss_log.csv"), events_(dir / "events.log") {
    if (!loss_ || !events_) throw FormatError("cannot create logs in " + dir.string());
    loss_ << (stage2 ? "step,loss_total,loss_sisdr,loss_mag,loss_distill,loss_aux\n"
                     : "step,loss_total,loss_sisdr,loss_mag\n");
    stage2_ = stage2;
  }
  void step(int s, const loss::LossReport& r) {
    char buf[256];
    if (stage2_)
      std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", s, r.total, r.si_sdr_se, r.mag, r.distill,
                    r.aux);
    else
      std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", s, r.total, r.si_sdr_se, r.mag);
    loss_ << buf;
    loss_.flush();
  }
  void event(const std::string& line) {
    events_ << line << '\n';
    events_.flush();
  }

 private:
  std::ofstream loss_;
  std::ofstream events_;
  bool stage2_ = false;
};

inline std::string checkpoint_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06d.artt", step);
  return buf;
}

inline nn::Checkpoint make_checkpoint(const TrainConfig& cfg, int sample_rate, int stage, int step,
                                      const nn::ParamSet& student, const nn::ParamSet* teacher,
                                      const nn::OptimState& opt) {
  nn::Checkpoint ck;
  ck.model = cfg.model;
  ck.win_len = cfg.win_len;
  ck.hop_len = cfg.hop_len;
  ck.fft_len = cfg.fft_len;
  ck.sample_rate = sample_rate;
  ck.stage = stage;
  ck.step = step;
  ck.student = student;
  if (teacher) ck.teacher = *teacher;
  ck.optim = opt;
  return ck;
}

// Shared step driver: per-item work in parallel, reduction in item order.
template <class ItemFn>
std::filesystem::path run_loop(const TrainConfig& cfg, int stage, int sample_rate, nn::ParamSet& theta,
                               nn::ParamSet* teacher, const std::filesystem::path& out_dir,
                               const TrainOptions& opt, ItemFn&& item_fn) {
  RunLog log(out_dir, stage == 2);
  auto adam = nn::OptimState::for_params(theta, cfg.adam);
  std::vector<ItemResult> results(cfg.batch_size);
  std::filesystem::path last;
  for (int step = 1; step <= cfg.steps; ++step) {
    parallel_for(results.size(), opt.jobs, [&](std::size_t b) { results[b] = item_fn(step, static_cast<int>(b)); });
    loss::LossReport mean;
    nn::ParamSet grad = theta.zeros_like();
    bool finite = true;
    const double w = 1.0 / cfg.batch_size;
    for (std::size_t b = 0; b < results.size(); ++b) {
      const auto& r = results[b];
      finite = finite && finite_report(r.report);
      mean.total += w * r.report.total;
      mean.si_sdr_se += w * r.report.si_sdr_se;
      mean.mag += w * r.report.mag;
      mean.distill += w * r.report.distill;
      mean.aux += w * r.report.aux;
      grad.add_scaled(r.grad, w);
      if (r.padded) log.event("step " + std::to_string(step) + " item " + std::to_string(b) + ": utterance shorter than crop, zero-padded");
      if (r.room_retries > 0)
        log.event("step " + std::to_string(step) + " item " + std::to_string(b) + ": resampled room " +
                  std::to_string(r.room_retries) + "x after deconvolution warning");
    }
    if (!finite) ++adam.skipped;
    if (!finite || !nn::adam_step(theta, grad, adam)) {
      log.event("step " + std::to_string(step) + ": non-finite loss or gradient, update skipped");
    } else if (teacher) {
      nn::ema_update(*teacher, theta, cfg.stage2.alpha);
    }
    log.step(step, mean);
    if (opt.on_step) opt.on_step(step, mean);
    if (step % cfg.checkpoint_every == 0 || step == cfg.steps) {
      auto ck = make_checkpoint(cfg, sample_rate, stage, step, theta, teacher, adam);
      last = out_dir / (step == cfg.steps ? std::string("final.artt") : checkpoint_name(step));
      nn::save_checkpoint(ck, last);
    }
  }
  return last;
}

inline std::size_t crop_samples(const TrainConfig& cfg, int sample_rate) {
  return static_cast<std::size_t>(std::lround(cfg.crop_len_s * sample_rate));
}

}  // namespace detail

/// Stage I: the network learns to undo an extra statistical reverberation
/// applied to the observed mixtures. Returns the final checkpoint path.
inline std::filesystem::path train_stage1(const TrainingSet& ts, TrainConfig cfg,
                                          const std::filesystem::path& out_dir, const TrainOptions& opt = {}) {
  cfg.model.freq_bins = cfg.fft_len / 2 + 1;
  cfg.validate();
  if (ts.items.empty()) throw ConfigError("train_stage1: empty training set");
  std::filesystem::create_directories(out_dir);
  const auto stft = cfg.stft();
  const int fs = ts.sample_rate;
  const std::size_t crop_len = detail::crop_samples(cfg, fs);
  auto init_rng = substream(cfg.seed, {tag(Stream::kInit)});
  nn::ParamSet theta = nn::init_params(cfg.model, init_rng);

  auto item = [&](int step, int b) {
    using detail::u;
    const auto c = detail::pick_crop(ts, cfg.seed, step, b, crop_len);
    const auto& y = ts.items[c.item];
    auto rr = substream(cfg.seed, {tag(Stream::kRir), u(step), u(b)});
    rir::StatisticalRtfParams p;
    p.t60_s = uniform(rr, cfg.stage1.t60_range_s[0], cfg.stage1.t60_range_s[1]);
    p.drr_db = uniform(rr, cfg.stage1.drr_range_db[0], cfg.stage1.drr_range_db[1]);
    p.sample_rate = fs;
    const auto h = rir::sample_statistical_rtf(p, rr);
    const auto z = detail::filtered_crop(y, h.taps, c.start, crop_len);
    const auto target = dsp::slice(y, c.start, crop_len);

    auto fr = nn::forward(theta, cfg.model, dsp::stft(z, stft));
    const auto est = dsp::istft_samples(fr.estimate, crop_len);
    auto l = loss::stage1_loss(est, target.view(), stft);
    detail::ItemResult r;
    r.report = l.report;
    r.padded = c.padded;
    r.grad = detail::chain_backward(fr.tape, fr.estimate, l.grad.d_estimate);
    return r;
  };
  return detail::run_loop(cfg, 1, fs, theta, nullptr, out_dir, opt, item);
}

/// Relative RIR for one Stage-II draw; resamples while deconvolution warns.
inline rir::Rir sample_relative_rir(const rir::RoomSampleRanges& ranges, std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> key, int fs, int* retries) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<std::uint64_t> tags{tag(Stream::kRoom)};
    tags.insert(tags.end(), key.begin(), key.end());
    tags.push_back(static_cast<std::uint64_t>(attempt));
    auto rng = substream(seed, tags);
    const auto spec = rir::sample_room_spec(ranges, rng, fs);
    const auto room = rir::simulate_room(spec);
    auto rel = rir::relative_rir(room.full, room.direct);
    if (!rel.meta.numerical_warning) return rel;
    if (retries) ++*retries;
  }
  throw NumericError("stage 2: 100 consecutive rooms produced degenerate relative RIRs");
}

/// Stage II: the student maps further-reverberated mixtures (relative RIRs of
/// simulated rooms plus noise) toward an EMA teacher's estimate on the mixture,
/// with an auxiliary reconstruction term toward the mixture itself.
inline std::filesystem::path train_stage2(const TrainingSet& ts, TrainConfig cfg, const nn::Checkpoint& init,
                                          const std::filesystem::path& out_dir, const TrainOptions& opt = {}) {
  cfg.model = init.model;
  cfg.win_len = init.win_len;
  cfg.hop_len = init.hop_len;
  cfg.fft_len = init.fft_len;
  cfg.validate();
  if (ts.items.empty()) throw ConfigError("train_stage2: empty training set");
  if (init.sample_rate != ts.sample_rate) throw ConfigError("train_stage2: checkpoint and data sample rates differ");
  std::filesystem::create_directories(out_dir);
  const auto stft = cfg.stft();
  const int fs = ts.sample_rate;
  const std::size_t crop_len = detail::crop_samples(cfg, fs);
  nn::ParamSet theta = init.student;
  nn::ParamSet teacher = init.student;
  teacher.touch();

  std::vector<rir::Rir> pool(cfg.stage2.room_pool);
  std::vector<int> pool_retries(pool.size(), 0);
  parallel_for(pool.size(), opt.jobs, [&](std::size_t i) {
    pool[i] = sample_relative_rir(cfg.stage2.rooms, cfg.seed, {1, static_cast<std::uint64_t>(i)}, fs, &pool_retries[i]);
  });

  auto item = [&](int step, int b) {
    using detail::u;
    detail::ItemResult r;
    const auto c = detail::pick_crop(ts, cfg.seed, step, b, crop_len);
    const auto& y = ts.items[c.item];
    rir::Rir pooled;
    const rir::Rir* h_rel = nullptr;
    if (pool.empty()) {
      pooled = sample_relative_rir(cfg.stage2.rooms, cfg.seed, {0, u(step), u(b)}, fs, &r.room_retries);
      h_rel = &pooled;
    } else {
      auto rp = substream(cfg.seed, {tag(Stream::kRoom), 2, u(step), u(b)});
      h_rel = &pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rp)];
    }
    const auto target_y = dsp::slice(y, c.start, crop_len);
    const double sigma = cfg.stage2.noise_factor * dsp::signal_std(y);
    auto rt = substream(cfg.seed, {tag(Stream::kTeacherNoise), u(step), u(b)});
    auto rs = substream(cfg.seed, {tag(Stream::kStudentNoise), u(step), u(b)});

    dsp::Waveform y_noisy = target_y;
    for (auto& v : y_noisy.samples) v += sigma * gaussian(rt);
    const auto teacher_target = detail::run_model(teacher, cfg.model, stft, y_noisy);

    auto z = detail::filtered_crop(y, h_rel->taps, c.start, crop_len);
    for (auto& v : z.samples) v += sigma * gaussian(rs);

    auto fr = nn::forward(theta, cfg.model, dsp::stft(z, stft));
    const auto est = dsp::istft_samples(fr.estimate, crop_len);
    auto l = cfg.stage2.use_aux
                 ? loss::stage2_loss(est, teacher_target.view(), target_y.view(), cfg.stage2.omega, stft)
                 : loss::distill_only_loss(est, teacher_target.view(), stft);
    r.report = l.report;
    r.padded = c.padded;
    r.grad = detail::chain_backward(fr.tape, fr.estimate, l.grad.d_estimate);
    return r;
  };
  return detail::run_loop(cfg, 2, fs, theta, &teacher, out_dir, opt, item);
}

/// x_hat = istft(F(stft(y))) with the student or the EMA teacher.
inline dsp::Waveform enhance(const nn::Checkpoint& ck, const dsp::Waveform& y, bool use_teacher = false) {
  if (y.sample_rate != ck.sample_rate)
    throw InputError("enhance: input is " + std::to_string(y.sample_rate) + " Hz, model was trained at " +
                     std::to_string(ck.sample_rate) + " Hz");
  if (use_teacher && !ck.teacher) throw InputError("enhance: checkpoint has no teacher parameters");
  return detail::run_model(use_teacher ? *ck.teacher : ck.student, ck.model, ck.stft(), y);
}

}  // namespace artt::train
