#pragma once

#include <cstdint>
#include <random>

namespace comtraq {

// Named substreams so that runners sharing a master seed see the same noise
// sequence for the same purpose regardless of which policy is in control.
enum class Stream : std::uint64_t {
  kSlip = 1,
  kParticles = 2,
  kMpc = 3,
  kPolicy = 4,
  kReplay = 5,
  kInit = 6,
  kTasks = 7,
};

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t episode,
                                    Stream s) {
  return derive_seed(master, episode, static_cast<std::uint64_t>(s));
}

// A seeded random stream. Owns its generator and the normal distribution's
// cached state, so two streams built from the same seed produce identical
// sequences.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }

  // Uniform on [lo, hi).
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  // Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace comtraq
