#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "artt/data/manifest.hpp"
#include "artt/data/mixture.hpp"
#include "artt/data/sources.hpp"
#include "artt/io/wav.hpp"
#include "artt/parallel.hpp"

namespace artt::data {

struct SplitCounts {
  int train = 200;
  int val = 20;
  int test = 20;
};

struct DatasetOptions {
  double duration_s = 4.0;
  rir::RoomSampleRanges rooms;
  std::array<double, 2> snr_db{kMinSnrDb, kMaxSnrDb};
  int sample_rate = dsp::kDefaultSampleRate;
  int jobs = 1;
};

inline std::string utt_id(Split s, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d", to_string(s), i);
  return buf;
}

/// Generates one utterance. Every draw is keyed by (seed, split, index), so
/// changing the size of one split leaves the others untouched.
inline Mixture make_utterance(std::uint64_t seed, Split split, int index, const DatasetOptions& opt) {
  const std::uint64_t s = static_cast<std::uint64_t>(split), i = static_cast<std::uint64_t>(index);
  auto src_rng = substream(seed, {tag(Stream::kSource), s, i});
  auto room_rng = substream(seed, {tag(Stream::kRoom), s, i});
  auto mix_rng = substream(seed, {tag(Stream::kMixture), s, i});
  const auto x = generate_toy_source(opt.duration_s, src_rng, opt.sample_rate);
  MixtureSpec spec;
  spec.room = rir::sample_room_spec(opt.rooms, room_rng, opt.sample_rate);
  spec.snr_db = uniform(mix_rng, opt.snr_db[0], opt.snr_db[1]);
  spec.seed = mix_rng();
  return synthesize_mixture(x, spec);
}

/// Writes out_dir/{train,val,test}/{mix,ref}/<utt_id>.wav (float32) and
/// out_dir/manifest.jsonl with paths relative to out_dir.
inline Manifest build_dataset(const std::filesystem::path& out_dir, const SplitCounts& counts,
                              const DatasetOptions& opt, std::uint64_t seed) {
  if (counts.train < 0 || counts.val < 0 || counts.test < 0) throw ConfigError("build_dataset: negative count");
  if (opt.snr_db[0] > opt.snr_db[1] || opt.snr_db[0] < kMinSnrDb || opt.snr_db[1] > kMaxSnrDb)
    throw ConfigError("build_dataset: snr range must be ordered within [5, 25]");
  struct Job {
    Split split;
    int index;
  };
  std::vector<Job> jobs;
  for (auto [split, n] : {std::pair{Split::kTrain, counts.train}, std::pair{Split::kVal, counts.val},
                          std::pair{Split::kTest, counts.test}}) {
    for (const char* sub : {"mix", "ref"}) {
      const auto dir = out_dir / to_string(split) / sub;
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw FormatError("cannot create " + dir.string() + ": " + ec.message());
    }
    for (int i = 0; i < n; ++i) jobs.push_back({split, i});
  }

  Manifest m;
  m.base_dir = out_dir;
  m.rows.resize(jobs.size());
  parallel_for(jobs.size(), opt.jobs, [&](std::size_t k) {
    const auto [split, index] = jobs[k];
    const auto mix = make_utterance(seed, split, index, opt);
    ManifestRow r;
    r.utt_id = utt_id(split, index);
    r.split = split;
    r.mixture_path = std::string(to_string(split)) + "/mix/" + r.utt_id + ".wav";
    r.reference_path = std::string(to_string(split)) + "/ref/" + r.utt_id + ".wav";
    r.input_snr_db = mix.meta.snr_db;
    r.t60_s = mix.meta.t60_s;
    io::write_wav(out_dir / r.mixture_path, mix.y);
    io::write_wav(out_dir / *r.reference_path, mix.reference);
    m.rows[k] = std::move(r);
  });
  write_manifest(out_dir / "manifest.jsonl", m.rows);
  return m;
}

}  // namespace artt::data
