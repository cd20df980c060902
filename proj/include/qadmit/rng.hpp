#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qadmit {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used to derive independent
/// seeds; constants are the published ones so seeds match across platforms.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of replication `rep_index` under `base_seed`.
constexpr std::uint64_t replication_seed(std::uint64_t base_seed, std::uint64_t rep_index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(0xA5A5A5A5ULL + rep_index));
}

/// Named sub-streams of one replication.
enum class Stream : std::uint64_t { Events = 1, Exploration = 2, Oracle = 3 };

constexpr std::uint64_t stream_seed(std::uint64_t rep_seed, Stream stream) {
  return splitmix64(rep_seed + 0x632BE59BD9B4E019ULL * static_cast<std::uint64_t>(stream));
}

/// mt19937_64 with portable uniform / exponential transforms (the standard
/// distributions are implementation-defined, the engine output is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exp(rate) via inversion; strictly positive.
  double exponential(double rate) {
    const double open_unit = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return -std::log(open_unit) / rate;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qadmit
