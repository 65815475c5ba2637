#pragma once

#include <cstdint>
#include <limits>

namespace tampsim {

/// What a random draw is used for. Part of the stream key, so adding a new
/// purpose never shifts the draws of existing ones.
enum class StreamPurpose : std::uint64_t {
  kRate = 1,
  kExtraction = 2,
  kDetection = 3,
  kMonteCarlo = 4,
  kSynthetic = 5,
};

/// SplitMix64 generator. Cheap to construct, so a fresh stream can be
/// derived for every (region, slot, purpose) key.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Uniform double in [0, 1) with 53 random bits.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Independent stream for one (seed, region, slot, purpose) key.
inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t region, std::uint64_t slot,
                             StreamPurpose purpose) {
  SplitMix64 mix(seed);
  std::uint64_t key = mix();
  key ^= SplitMix64(region * 0x632be59bd9b4e019ULL + 1)();
  key = SplitMix64(key)() ^ SplitMix64(slot * 0x85157af5ULL + 7)();
  key = SplitMix64(key)() ^ SplitMix64(static_cast<std::uint64_t>(purpose) + 0x51ULL)();
  return SplitMix64(key);
}

}  // namespace tampsim
