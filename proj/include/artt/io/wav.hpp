#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "artt/dsp/waveform.hpp"

namespace artt::io {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

enum class SampleFormat { kPcm16, kFloat32 };

struct WavInfo {
  int channels = 1;
  int sample_rate = 0;
  SampleFormat format = SampleFormat::kFloat32;
  std::size_t frames = 0;
};

namespace detail {

inline std::uint16_t u16(const char* p) {
  std::uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}
inline std::uint32_t u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

template <class T>
void put(std::string& s, T v) {
  s.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace detail

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, plain or extensible header).
/// Multichannel files yield their first channel; `info` reports the original
/// channel count.
inline dsp::Waveform read_wav(const std::filesystem::path& path, WavInfo* info = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open WAV: " + path.string());
  const std::string b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "WAV " + path.string() + ": ";
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw FormatError(where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const std::size_t len = detail::u32(b.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16 || body + len > b.size()) throw FormatError(where + "malformed fmt chunk");
      const char* f = b.data() + body;
      tag = detail::u16(f);
      channels = detail::u16(f + 2);
      rate = detail::u32(f + 4);
      block_align = detail::u16(f + 12);
      bits = detail::u16(f + 14);
      if (tag == 0xFFFE) {
        if (len < 40) throw FormatError(where + "malformed extensible fmt chunk");
        tag = detail::u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(where + "data chunk before fmt chunk");
      if (body + len > b.size()) throw FormatError(where + "truncated data chunk");
      data = b.data() + body;
      data_len = len;
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) throw FormatError(where + "missing fmt chunk");
  if (data == nullptr) throw FormatError(where + "missing data chunk");
  if (channels == 0 || rate == 0) throw FormatError(where + "zero channels or sample rate");

  SampleFormat fmt;
  if (tag == 1 && bits == 16) fmt = SampleFormat::kPcm16;
  else if (tag == 3 && bits == 32) fmt = SampleFormat::kFloat32;
  else
    throw FormatError(where + "unsupported codec (format " + std::to_string(tag) + ", " + std::to_string(bits) +
                      " bits); expected PCM16 or float32");
  const std::size_t bytes_per = bits / 8;
  if (block_align != channels * bytes_per) throw FormatError(where + "inconsistent block alignment");

  const std::size_t frames = data_len / block_align;
  dsp::Waveform w = dsp::Waveform::zeros(frames, static_cast<int>(rate));
  for (std::size_t i = 0; i < frames; ++i) {
    const char* s = data + i * block_align;
    if (fmt == SampleFormat::kPcm16) {
      std::int16_t q;
      std::memcpy(&q, s, 2);
      w[i] = q / 32768.0;
    } else {
      float f;
      std::memcpy(&f, s, 4);
      w[i] = f;
    }
  }
  dsp::validate(w, where.c_str());
  if (info) *info = {channels, static_cast<int>(rate), fmt, frames};
  return w;
}

/// Writes a mono WAV. PCM16 rounds to the nearest step of 2^-15 and clips.
inline void write_wav(const std::filesystem::path& path, const dsp::Waveform& w,
                      SampleFormat fmt = SampleFormat::kFloat32) {
  dsp::validate(w, "write_wav");
  const std::uint16_t bits = fmt == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint16_t align = bits / 8;
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.size() * align);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  detail::put<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  detail::put<std::uint32_t>(out, 16);
  detail::put<std::uint16_t>(out, fmt == SampleFormat::kPcm16 ? 1 : 3);
  detail::put<std::uint16_t>(out, 1);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * align);
  detail::put<std::uint16_t>(out, align);
  detail::put<std::uint16_t>(out, bits);
  out += "data";
  detail::put<std::uint32_t>(out, data_len);
  for (double v : w.samples) {
    if (fmt == SampleFormat::kPcm16) {
      const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      detail::put<std::int16_t>(out, static_cast<std::int16_t>(q));
    } else {
      detail::put<float>(out, static_cast<float>(v));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot write WAV: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("write failed: " + path.string());
}

}  // namespace artt::io
