#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace artt {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream keyed by (seed, tags...). Each stochastic decision in a
/// training step draws from its own stream so toggling one decision never
/// shifts another.
inline Rng substream(std::uint64_t seed, std::span<const std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  return substream(seed, std::span<const std::uint64_t>(tags.begin(), tags.size()));
}

// Stream purposes.
enum class Stream : std::uint64_t {
  kInit = 1,
  kBatch = 2,
  kCrop = 3,
  kRir = 4,
  kRoom = 5,
  kTeacherNoise = 6,
  kStudentNoise = 7,
  kSource = 8,
  kMixture = 9,
  kNoise = 10,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace artt
