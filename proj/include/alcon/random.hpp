#pragma once

#include <cstdint>
#include <random>

namespace alcon {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent streams from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Stream tags so that different consumers of one seed never share draws.
enum class Stream : std::uint64_t {
  kWorld = 1,
  kEpisode = 2,
  kCues = 3,
  kPlanner = 4,
  kSample = 5,
  kAugment = 6,
  kAlc = 7,
  kOracle = 8,
  kPool = 9,
  kInit = 10,
  kShuffle = 11,
  kBaseline = 12,
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream s, std::uint64_t index = 0) {
  return derive_seed(derive_seed(base, static_cast<std::uint64_t>(s)), index);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace alcon
