#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "artt/nn/model.hpp"
#include "artt/nn/optim.hpp"
#include "artt/rir/room.hpp"

namespace artt::train {

using Range = std::array<double, 2>;

struct Stage1Config {
  Range t60_range_s{0.5, 1.2};
  Range drr_range_db{-16.0, -6.0};
};

struct Stage2Config {
  rir::RoomSampleRanges rooms;  // length/width [5,10], height [3,4], t60 [0.2,1.3]
  double omega = 1.2;
  double alpha = 0.999;
  double noise_factor = 0.02;
  bool use_aux = true;
  // 0: simulate a fresh room for every item of every step. N > 0: draw items
  // from N rooms simulated once at start-up.
  int room_pool = 0;
};

/// Everything that determines a training run except the manifest and paths.
struct TrainConfig {
  std::uint64_t seed = 0;
  int steps = 5000;
  int batch_size = 4;
  double crop_len_s = 4.0;
  int checkpoint_every = 500;
  nn::AdamConfig adam;
  int win_len = 512;
  int hop_len = 128;
  int fft_len = 512;
  nn::ModelConfig model;
  Stage1Config stage1;
  Stage2Config stage2;

  dsp::StftConfig stft() const { return dsp::StftConfig::make(win_len, hop_len, fft_len); }

  void validate() const {
    if (steps < 1) throw ConfigError("config: steps must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (!(crop_len_s > 0.0)) throw ConfigError("config: crop_len_s must be > 0");
    if (checkpoint_every < 1) throw ConfigError("config: checkpoint_every must be >= 1");
    adam.validate();
    stft();
    nn::ModelConfig m = model;
    m.freq_bins = fft_len / 2 + 1;
    m.validate();
    auto ordered = [](const Range& r, const char* what) {
      if (!(r[0] <= r[1])) throw ConfigError(std::string("config: ") + what + " range must be ordered");
    };
    ordered(stage1.t60_range_s, "stage1.t60_range_s");
    ordered(stage1.drr_range_db, "stage1.drr_range_db");
    if (!(stage1.t60_range_s[0] > 0.0)) throw ConfigError("config: stage1 T60 must be > 0");
    const auto& r = stage2.rooms;
    ordered(r.length_m, "stage2.room_length_m");
    ordered(r.width_m, "stage2.room_width_m");
    ordered(r.height_m, "stage2.room_height_m");
    ordered(r.t60_s, "stage2.t60_range_s");
    ordered(r.distance_m, "stage2.distance_m");
    if (!(stage2.omega > 0.0)) throw ConfigError("config: stage2.omega must be > 0");
    if (!(stage2.alpha >= 0.0 && stage2.alpha < 1.0)) throw ConfigError("config: stage2.alpha must be in [0, 1)");
    if (!(stage2.noise_factor >= 0.0)) throw ConfigError("config: stage2.noise_factor must be >= 0");
    if (stage2.room_pool < 0) throw ConfigError("config: stage2.room_pool must be >= 0");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config: bad value for '" + key + "': '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: bad boolean for '" + key + "': '" + text + "'");
}

inline Range parse_range(const std::string& key, const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos)
    throw ConfigError("config: '" + key + "' expects two comma-separated values");
  return {parse_number<double>(key, text.substr(0, comma)), parse_number<double>(key, text.substr(comma + 1))};
}

// Comma-separated numbers; an empty value is an empty list.
inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(parse_number<double>(key, text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) return out;
    pos = comma + 1;
  }
}

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <class T>
Field num(std::string key, T TrainConfig::*member) {
  return {key,
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*member);
            else return std::to_string(c.*member);
          },
          [member, key](TrainConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); }};
}

template <class Get>
Field dbl(std::string key, Get ref) {
  return {key, [ref](const TrainConfig& c) { return fmt_double(ref(const_cast<TrainConfig&>(c))); },
          [ref, key](TrainConfig& c, const std::string& v) { ref(c) = parse_number<double>(key, v); }};
}

template <class Get>
Field integer(std::string key, Get ref) {
  return {key, [ref](const TrainConfig& c) { return std::to_string(ref(const_cast<TrainConfig&>(c))); },
          [ref, key](TrainConfig& c, const std::string& v) { ref(c) = parse_number<int>(key, v); }};
}

template <class Get>
Field range(std::string key, Get ref) {
  return {key,
          [ref](const TrainConfig& c) {
            const Range& r = ref(const_cast<TrainConfig&>(c));
            return fmt_double(r[0]) + ", " + fmt_double(r[1]);
          },
          [ref, key](TrainConfig& c, const std::string& v) { ref(c) = parse_range(key, v); }};
}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    v.push_back(num("seed", &TrainConfig::seed));
    v.push_back(num("steps", &TrainConfig::steps));
    v.push_back(num("batch_size", &TrainConfig::batch_size));
    v.push_back(num("crop_len_s", &TrainConfig::crop_len_s));
    v.push_back(num("checkpoint_every", &TrainConfig::checkpoint_every));
    v.push_back(dbl("lr", [](TrainConfig& c) -> double& { return c.adam.lr; }));
    v.push_back(dbl("adam.beta1", [](TrainConfig& c) -> double& { return c.adam.beta1; }));
    v.push_back(dbl("adam.beta2", [](TrainConfig& c) -> double& { return c.adam.beta2; }));
    v.push_back(dbl("adam.eps", [](TrainConfig& c) -> double& { return c.adam.eps; }));
    v.push_back(num("stft.win_len", &TrainConfig::win_len));
    v.push_back(num("stft.hop_len", &TrainConfig::hop_len));
    v.push_back(num("stft.fft_len", &TrainConfig::fft_len));
    v.push_back(integer("model.context", [](TrainConfig& c) -> int& { return c.model.context; }));
    v.push_back(integer("model.hidden", [](TrainConfig& c) -> int& { return c.model.hidden; }));
    v.push_back(integer("model.n_layers", [](TrainConfig& c) -> int& { return c.model.n_layers; }));
    v.push_back({"model.head", [](const TrainConfig& c) { return std::string(nn::to_string(c.model.head)); },
                 [](TrainConfig& c, const std::string& s) { c.model.head = nn::parse_head(trim(s)); }});
    v.push_back(dbl("model.compress", [](TrainConfig& c) -> double& { return c.model.compress; }));
    v.push_back({"model.history",
                 [](const TrainConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.model.history.size(); ++i)
                     s += (i ? ", " : "") + fmt_double(c.model.history[i]);
                   return s;
                 },
                 [](TrainConfig& c, const std::string& s) { c.model.history = parse_list("model.history", s); }});
    v.push_back({"model.zero_output_init",
                 [](const TrainConfig& c) { return std::string(c.model.zero_output_init ? "true" : "false"); },
                 [](TrainConfig& c, const std::string& s) {
                   c.model.zero_output_init = parse_bool("model.zero_output_init", s);
                 }});
    v.push_back(range("stage1.t60_range_s", [](TrainConfig& c) -> Range& { return c.stage1.t60_range_s; }));
    v.push_back(range("stage1.drr_range_db", [](TrainConfig& c) -> Range& { return c.stage1.drr_range_db; }));
    v.push_back(range("stage2.room_length_m", [](TrainConfig& c) -> Range& { return c.stage2.rooms.length_m; }));
    v.push_back(range("stage2.room_width_m", [](TrainConfig& c) -> Range& { return c.stage2.rooms.width_m; }));
    v.push_back(range("stage2.room_height_m", [](TrainConfig& c) -> Range& { return c.stage2.rooms.height_m; }));
    v.push_back(range("stage2.t60_range_s", [](TrainConfig& c) -> Range& { return c.stage2.rooms.t60_s; }));
    v.push_back(range("stage2.distance_m", [](TrainConfig& c) -> Range& { return c.stage2.rooms.distance_m; }));
    v.push_back(dbl("stage2.wall_margin_m", [](TrainConfig& c) -> double& { return c.stage2.rooms.wall_margin_m; }));
    v.push_back(dbl("stage2.omega", [](TrainConfig& c) -> double& { return c.stage2.omega; }));
    v.push_back(dbl("stage2.alpha", [](TrainConfig& c) -> double& { return c.stage2.alpha; }));
    v.push_back(dbl("stage2.noise_factor", [](TrainConfig& c) -> double& { return c.stage2.noise_factor; }));
    v.push_back({"stage2.use_aux", [](const TrainConfig& c) { return std::string(c.stage2.use_aux ? "true" : "false"); },
                 [](TrainConfig& c, const std::string& s) { c.stage2.use_aux = parse_bool("stage2.use_aux", s); }});
    v.push_back(integer("stage2.room_pool", [](TrainConfig& c) -> int& { return c.stage2.room_pool; }));
    return v;
  }();
  return f;
}

}  // namespace detail

/// Applies `key = value` lines (`#` starts a comment) on top of `base`.
/// Unknown keys and repeated keys are rejected.
inline TrainConfig parse_config(std::istream& in, TrainConfig base = {}, const std::string& origin = "config") {
  std::vector<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    const auto& fs = detail::fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const auto& f) { return f.key == key; });
    if (it == fs.end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) throw ConfigError(where + "duplicate key '" + key + "'");
    seen.push_back(key);
    try {
      it->set(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  base.model.freq_bins = base.fft_len / 2 + 1;
  base.validate();
  return base;
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  return parse_config(in, std::move(base), path.string());
}

/// Every key with its resolved value; parsing this text reproduces `c` exactly.
inline std::string echo_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "# effective configuration (all defaults resolved)\n";
  for (const auto& f : detail::fields()) out << f.key << " = " << f.get(c) << '\n';
  return out.str();
}

}  // namespace artt::train
