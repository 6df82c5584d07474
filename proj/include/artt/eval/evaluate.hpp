#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "artt/data/manifest.hpp"
#include "artt/io/wav.hpp"
#include "artt/metrics/estoi.hpp"
#include "artt/metrics/si_sdr.hpp"
#include "artt/nn/checkpoint.hpp"
#include "artt/parallel.hpp"
#include "artt/train/trainer.hpp"

namespace artt::eval {

/// Network whose output is scored; `mixture` scores the unprocessed input.
enum class Net { kStudent, kTeacher, kMixture };

inline const char* to_string(Net n) {
  switch (n) {
    case Net::kStudent: return "student";
    case Net::kTeacher: return "teacher";
    case Net::kMixture: return "mixture";
  }
  return "student";
}

inline Net parse_net(const std::string& s) {
  if (s == "student") return Net::kStudent;
  if (s == "teacher") return Net::kTeacher;
  if (s == "mixture") return Net::kMixture;
  throw ConfigError("unknown net '" + s + "' (expected student|teacher|mixture|both)");
}

struct EvalRecord {
  std::string utt_id;
  double si_sdr_db = 0.0;
  std::optional<double> estoi;  // absent when the utterance is too short
  std::optional<double> input_snr_db;
  Net net = Net::kStudent;
};

struct Bucket {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  double mean_si_sdr = 0.0;
  double mean_estoi = 0.0;
  std::size_t estoi_count = 0;
};

struct Summary {
  Net net = Net::kStudent;
  std::size_t count = 0;
  double mean_si_sdr = 0.0;
  double mean_estoi = 0.0;
  std::size_t estoi_count = 0;
  std::vector<Bucket> buckets;
};

struct EvalOptions {
  bool by_snr_buckets = false;
  std::vector<Net> nets{Net::kStudent};
  std::optional<data::Split> split = data::Split::kTest;  // empty: every row
  int jobs = 1;
};

struct EvalReport {
  std::vector<EvalRecord> records;  // manifest order, grouped by net
  std::vector<Summary> summaries;
  std::vector<std::string> skipped;  // "<utt_id>: reason"
  std::vector<std::string> warnings;
};

// Input-SNR buckets: [5,10), [10,15), [15,20), [20,25].
inline constexpr std::array<std::array<double, 2>, 4> kSnrBuckets{{{5, 10}, {10, 15}, {15, 20}, {20, 25}}};

inline int bucket_index(double snr) {
  for (int i = 0; i < 4; ++i) {
    const bool last = i == 3;
    if (snr >= kSnrBuckets[i][0] && (snr < kSnrBuckets[i][1] || (last && snr <= kSnrBuckets[i][1]))) return i;
  }
  return -1;
}

inline Summary summarize(const std::vector<EvalRecord>& recs, Net net, bool by_snr) {
  Summary s;
  s.net = net;
  if (by_snr)
    for (const auto& b : kSnrBuckets) s.buckets.push_back({b[0], b[1]});
  for (const auto& r : recs) {
    if (r.net != net) continue;
    ++s.count;
    s.mean_si_sdr += r.si_sdr_db;
    if (r.estoi) s.mean_estoi += *r.estoi, ++s.estoi_count;
    if (by_snr && r.input_snr_db) {
      const int i = bucket_index(*r.input_snr_db);
      if (i < 0) continue;
      auto& b = s.buckets[i];
      ++b.count;
      b.mean_si_sdr += r.si_sdr_db;
      if (r.estoi) b.mean_estoi += *r.estoi, ++b.estoi_count;
    }
  }
  if (s.count) s.mean_si_sdr /= s.count;
  if (s.estoi_count) s.mean_estoi /= s.estoi_count;
  for (auto& b : s.buckets) {
    if (b.count) b.mean_si_sdr /= b.count;
    if (b.estoi_count) b.mean_estoi /= b.estoi_count;
  }
  return s;
}

/// Scores every selected manifest row against its direct-path reference.
/// Rows without a readable reference are listed in `skipped`. Read-only: no
/// input file is modified.
inline EvalReport evaluate_set(const nn::Checkpoint* ck, const data::Manifest& m, const EvalOptions& opt) {
  EvalReport rep;
  const auto rows = m.select(opt.split);
  if (rows.empty()) rep.warnings.push_back("manifest selection is empty; nothing evaluated");
  for (Net n : opt.nets) {
    if (n != Net::kMixture && ck == nullptr) throw ConfigError("evaluate_set: a checkpoint is required for net '" + std::string(to_string(n)) + "'");
    if (n == Net::kTeacher && !ck->teacher) throw ConfigError("evaluate_set: checkpoint has no teacher parameters");
  }

  struct Slot {
    std::vector<EvalRecord> recs;
    std::string skip;
  };
  std::vector<Slot> slots(rows.size());
  parallel_for(rows.size(), opt.jobs, [&](std::size_t i) {
    const auto& row = *rows[i];
    auto& slot = slots[i];
    if (!row.reference_path) {
      slot.skip = row.utt_id + ": no reference_path";
      return;
    }
    dsp::Waveform ref, y;
    try {
      ref = io::read_wav(m.resolve(*row.reference_path));
      y = io::read_wav(m.resolve(row.mixture_path));
    } catch (const FormatError& e) {
      slot.skip = row.utt_id + ": " + e.what();
      return;
    }
    if (ref.size() != y.size() || ref.sample_rate != y.sample_rate) {
      slot.skip = row.utt_id + ": mixture/reference length or rate mismatch";
      return;
    }
    for (Net n : opt.nets) {
      const dsp::Waveform est = n == Net::kMixture ? y : train::enhance(*ck, y, n == Net::kTeacher);
      EvalRecord r;
      r.utt_id = row.utt_id;
      r.net = n;
      r.input_snr_db = row.input_snr_db;
      r.si_sdr_db = metrics::si_sdr_metric(est, ref);
      try {
        r.estoi = metrics::estoi(est, ref);
      } catch (const InputError&) {
        r.estoi.reset();
      }
      slot.recs.push_back(std::move(r));
    }
  });

  for (Net n : opt.nets)
    for (const auto& s : slots)
      for (const auto& r : s.recs)
        if (r.net == n) rep.records.push_back(r);
  for (const auto& s : slots)
    if (!s.skip.empty()) rep.skipped.push_back(s.skip);
  for (Net n : opt.nets) rep.summaries.push_back(summarize(rep.records, n, opt.by_snr_buckets));
  return rep;
}

inline void write_csv(const std::filesystem::path& path, const EvalReport& rep) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write report: " + path.string());
  out << "utt_id,si_sdr_db,estoi,input_snr_db,net\n";
  char buf[64];
  for (const auto& r : rep.records) {
    out << r.utt_id << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.si_sdr_db);
    out << buf << ',';
    if (r.estoi) std::snprintf(buf, sizeof buf, "%.17g", *r.estoi), out << buf;
    out << ',';
    if (r.input_snr_db) std::snprintf(buf, sizeof buf, "%.17g", *r.input_snr_db), out << buf;
    out << ',' << to_string(r.net) << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

inline nlohmann::json summary_json(const EvalReport& rep) {
  nlohmann::json j;
  j["nets"] = nlohmann::json::array();
  for (const auto& s : rep.summaries) {
    nlohmann::json n = {{"net", to_string(s.net)},
                        {"count", s.count},
                        {"mean_si_sdr_db", s.mean_si_sdr},
                        {"mean_estoi", s.mean_estoi},
                        {"estoi_count", s.estoi_count}};
    if (!s.buckets.empty()) {
      n["snr_buckets"] = nlohmann::json::array();
      for (const auto& b : s.buckets)
        n["snr_buckets"].push_back({{"lo_db", b.lo},
                                    {"hi_db", b.hi},
                                    {"count", b.count},
                                    {"mean_si_sdr_db", b.mean_si_sdr},
                                    {"mean_estoi", b.mean_estoi}});
    }
    j["nets"].push_back(n);
  }
  j["skipped"] = rep.skipped;
  j["warnings"] = rep.warnings;
  return j;
}

}  // namespace artt::eval
