#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "artt/dsp/stft.hpp"
#include "artt/error.hpp"

namespace artt::io {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<int> pixels;
};

/// Log-magnitude image of `s`: one column per frame, highest bin on the top
/// row. Levels are dB relative to the loudest bin, clipped to [db_floor, 0]
/// and mapped linearly onto 0..255.
inline GrayImage spectrogram_image(const dsp::ComplexSpectrogram& s, double db_floor = -80.0) {
  if (!(db_floor < 0.0)) throw ConfigError("spectrogram: db floor must be negative");
  double peak = 0.0;
  for (const auto& z : s.data) peak = std::max(peak, std::abs(z));
  GrayImage img;
  img.width = s.num_frames;
  img.height = s.num_bins;
  img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
  if (peak <= 0.0) return img;
  for (int t = 0; t < s.num_frames; ++t)
    for (int k = 0; k < s.num_bins; ++k) {
      const double m = std::abs(s.at(t, k));
      const double db = m > 0.0 ? std::max(db_floor, 20.0 * std::log10(m / peak)) : db_floor;
      const int v = static_cast<int>(std::lround(255.0 * (db - db_floor) / -db_floor));
      img.pixels[static_cast<std::size_t>(s.num_bins - 1 - k) * img.width + t] = std::clamp(v, 0, 255);
    }
  return img;
}

/// Plain (ASCII, P2) PGM.
inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write image: " + path.string());
  out << "P2\n" << img.width << ' ' << img.height << "\n255\n";
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) out << (c ? " " : "") << img.pixels[static_cast<std::size_t>(r) * img.width + c];
    out << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

}  // namespace artt::io
