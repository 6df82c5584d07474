#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "artt/error.hpp"

namespace artt::data {

enum class Split { kTrain, kVal, kTest };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw FormatError("unknown split '" + s + "'");
}

struct ManifestRow {
  std::string utt_id;
  std::string mixture_path;
  std::optional<std::string> reference_path;
  std::optional<double> input_snr_db;
  std::optional<double> t60_s;
  Split split = Split::kTrain;

  bool operator==(const ManifestRow&) const = default;
};

/// Rows plus the directory that relative paths resolve against.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  std::vector<const ManifestRow*> select(std::optional<Split> split) const {
    std::vector<const ManifestRow*> out;
    for (const auto& r : rows)
      if (!split || r.split == *split) out.push_back(&r);
    return out;
  }
};

inline nlohmann::json to_json(const ManifestRow& r) {
  nlohmann::json j = {{"utt_id", r.utt_id}, {"mixture_path", r.mixture_path}, {"split", to_string(r.split)}};
  if (r.reference_path) j["reference_path"] = *r.reference_path;
  if (r.input_snr_db) j["input_snr_db"] = *r.input_snr_db;
  if (r.t60_s) j["t60_s"] = *r.t60_s;
  return j;
}

/// One JSON object per line.
inline void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest: " + path.string());
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
  if (!out) throw FormatError("write failed: " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest: " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRow r;
      r.utt_id = j.at("utt_id").get<std::string>();
      r.mixture_path = j.at("mixture_path").get<std::string>();
      r.split = parse_split(j.value("split", std::string("train")));
      if (j.contains("reference_path")) r.reference_path = j.at("reference_path").get<std::string>();
      if (j.contains("input_snr_db")) r.input_snr_db = j.at("input_snr_db").get<double>();
      if (j.contains("t60_s")) r.t60_s = j.at("t60_s").get<double>();
      if (!seen.insert(r.utt_id).second) throw FormatError("duplicate utt_id '" + r.utt_id + "'");
      m.rows.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + "malformed manifest row (" + e.what() + ")");
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return m;
}

}  // namespace artt::data
