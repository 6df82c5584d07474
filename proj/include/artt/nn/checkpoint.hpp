#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "artt/dsp/stft.hpp"
#include "artt/nn/model.hpp"
#include "artt/nn/optim.hpp"

namespace artt::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[5] = {'A', 'R', 'T', 'T', '1'};
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  int win_len = 512;
  int hop_len = 128;
  int fft_len = 512;
  int sample_rate = dsp::kDefaultSampleRate;
  int stage = 1;
  std::int64_t step = 0;
  ParamSet student;
  std::optional<ParamSet> teacher;
  std::optional<OptimState> optim;

  dsp::StftConfig stft() const { return dsp::StftConfig::make(win_len, hop_len, fft_len); }
};

namespace detail {

inline nlohmann::json model_json(const ModelConfig& m) {
  return {{"context", m.context},   {"hidden", m.hidden},     {"n_layers", m.n_layers},
          {"freq_bins", m.freq_bins}, {"head", to_string(m.head)}, {"compress", m.compress},
          {"history", m.history}, {"zero_output_init", m.zero_output_init}};
}

inline ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.context = j.at("context").get<int>();
  m.hidden = j.at("hidden").get<int>();
  m.n_layers = j.at("n_layers").get<int>();
  m.freq_bins = j.at("freq_bins").get<int>();
  m.head = parse_head(j.at("head").get<std::string>());
  m.compress = j.at("compress").get<double>();
  m.history = j.at("history").get<std::vector<double>>();
  m.zero_output_init = j.at("zero_output_init").get<bool>();
  m.validate();
  return m;
}

struct Entry {
  std::string name;
  const Matrix* value;
  bool is_vector;
};

}  // namespace detail

/// Layout: "ARTT1", u32 LE header length, JSON header, then float64 LE payloads
/// in table order. Matrices are stored column-major. Key order in the header is
/// canonical, so save -> load -> save is byte-identical.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  check_layout(ck.student, ck.model);
  if (ck.teacher) check_layout(*ck.teacher, ck.model);

  std::vector<detail::Entry> entries;
  for (const auto& t : ck.student.tensors) entries.push_back({"student/" + t.name, &t.value, t.is_vector});
  if (ck.teacher)
    for (const auto& t : ck.teacher->tensors) entries.push_back({"teacher/" + t.name, &t.value, t.is_vector});
  if (ck.optim) {
    if (ck.optim->m.size() != ck.student.size()) throw ConfigError("save_checkpoint: optimizer/parameter mismatch");
    for (std::size_t i = 0; i < ck.student.size(); ++i) {
      const auto& t = ck.student[i];
      entries.push_back({"adam_m/" + t.name, &ck.optim->m[i], t.is_vector});
      entries.push_back({"adam_v/" + t.name, &ck.optim->v[i], t.is_vector});
    }
  }

  nlohmann::json table = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& e : entries) {
    nlohmann::json shape = e.is_vector ? nlohmann::json::array({e.value->rows()})
                                       : nlohmann::json::array({e.value->rows(), e.value->cols()});
    table.push_back({{"name", e.name}, {"shape", shape}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(e.value->size()) * sizeof(double);
  }
  nlohmann::json header = {
      {"version", kCheckpointVersion},
      {"model", detail::model_json(ck.model)},
      {"stft", {{"win_len", ck.win_len}, {"hop_len", ck.hop_len}, {"fft_len", ck.fft_len}}},
      {"sample_rate", ck.sample_rate},
      {"stage", ck.stage},
      {"step", ck.step},
      {"student_step_count", ck.student.step_count},
      {"has_teacher", ck.teacher.has_value()},
      {"tensors", table},
  };
  if (ck.optim) {
    const auto& o = *ck.optim;
    header["optim"] = {{"lr", o.config.lr},       {"beta1", o.config.beta1}, {"beta2", o.config.beta2},
                       {"eps", o.config.eps},     {"t", o.t},                {"skipped", o.skipped}};
  }
  const std::string text = header.dump();

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint: " + tmp);
    out.write(kCheckpointMagic, 5);
    const std::uint32_t hlen = static_cast<std::uint32_t>(text.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : entries)
      out.write(reinterpret_cast<const char*>(e.value->data()),
                static_cast<std::streamsize>(e.value->size() * sizeof(double)));
    if (!out) throw FormatError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kCheckpointMagic, 5) != 0)
    throw FormatError(where + "bad magic (not an ARTT1 file)");
  std::uint32_t hlen = 0;
  std::memcpy(&hlen, bytes.data() + 5, 4);
  if (9ull + hlen > bytes.size()) throw FormatError(where + "corrupt or truncated header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.begin() + 9, bytes.begin() + 9 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "corrupt header (" + e.what() + ")");
  }
  const std::size_t payload0 = 9ull + hlen;
  const std::size_t payload_len = bytes.size() - payload0;

  try {
    const int version = h.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw FormatError(where + "unsupported version " + std::to_string(version) + " (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    ck.model = detail::model_from_json(h.at("model"));
    ck.win_len = h.at("stft").at("win_len").get<int>();
    ck.hop_len = h.at("stft").at("hop_len").get<int>();
    ck.fft_len = h.at("stft").at("fft_len").get<int>();
    ck.sample_rate = h.at("sample_rate").get<int>();
    ck.stage = h.at("stage").get<int>();
    ck.step = h.at("step").get<std::int64_t>();
    const bool has_teacher = h.at("has_teacher").get<bool>();

    // Template layout from the config; the table must match it exactly.
    Rng dummy(0);
    ModelConfig shape_cfg = ck.model;
    ParamSet proto = init_params(shape_cfg, dummy).zeros_like();
    ck.student = proto;
    ck.student.step_count = h.at("student_step_count").get<std::int64_t>();
    if (has_teacher) ck.teacher = proto;
    if (h.contains("optim")) {
      const auto& o = h.at("optim");
      AdamConfig ac{o.at("lr").get<double>(), o.at("beta1").get<double>(), o.at("beta2").get<double>(),
                    o.at("eps").get<double>()};
      ck.optim = OptimState::for_params(proto, ac);
      ck.optim->t = o.at("t").get<std::int64_t>();
      ck.optim->skipped = o.at("skipped").get<std::int64_t>();
    }

    std::vector<std::pair<std::string, Matrix*>> expected;
    for (auto& t : ck.student.tensors) expected.emplace_back("student/" + t.name, &t.value);
    if (ck.teacher)
      for (auto& t : ck.teacher->tensors) expected.emplace_back("teacher/" + t.name, &t.value);
    if (ck.optim)
      for (std::size_t i = 0; i < proto.size(); ++i) {
        expected.emplace_back("adam_m/" + proto[i].name, &ck.optim->m[i]);
        expected.emplace_back("adam_v/" + proto[i].name, &ck.optim->v[i]);
      }

    const auto& table = h.at("tensors");
    if (table.size() != expected.size()) throw FormatError(where + "tensor table does not match model config");
    std::uint64_t next = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& row = table[i];
      Matrix& dst = *expected[i].second;
      const auto name = row.at("name").get<std::string>();
      if (name != expected[i].first)
        throw FormatError(where + "unexpected tensor '" + name + "' (expected '" + expected[i].first + "')");
      const auto shape = row.at("shape").get<std::vector<std::int64_t>>();
      const std::int64_t rows = shape.empty() ? -1 : shape[0];
      const std::int64_t cols = shape.size() == 2 ? shape[1] : 1;
      if (shape.empty() || shape.size() > 2 || rows != dst.rows() || cols != dst.cols())
        throw FormatError(where + "shape mismatch for '" + name + "'");
      const auto offset = row.at("offset").get<std::uint64_t>();
      const std::uint64_t nbytes = static_cast<std::uint64_t>(dst.size()) * sizeof(double);
      if (offset != next) throw FormatError(where + "non-contiguous payload at '" + name + "'");
      if (offset + nbytes > payload_len) throw FormatError(where + "truncated payload at '" + name + "'");
      std::memcpy(dst.data(), bytes.data() + payload0 + offset, nbytes);
      next = offset + nbytes;
    }
    if (next != payload_len) throw FormatError(where + "trailing bytes after payload");
    ck.student.touch();
    if (ck.teacher) ck.teacher->touch();
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header field (" + e.what() + ")");
  }
}

}  // namespace artt::nn
