#pragma once

#include <cstdint>
#include <random>

namespace edgeav {

/// SplitMix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic child seed for (stream, index) under a master seed.
/// Distinct streams give statistically independent generators.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index = 0) noexcept;

/// Named streams so that changing one consumer never shifts another.
namespace stream {
inline constexpr std::uint64_t kScenario = 1;
inline constexpr std::uint64_t kTrainEpisode = 2;
inline constexpr std::uint64_t kEvalEpisode = 3;
inline constexpr std::uint64_t kLatency = 4;
inline constexpr std::uint64_t kPerceptionNoise = 5;
inline constexpr std::uint64_t kModelInit = 6;
inline constexpr std::uint64_t kReplay = 7;
inline constexpr std::uint64_t kExploration = 8;
inline constexpr std::uint64_t kDataset = 9;
inline constexpr std::uint64_t kBenchEpisode = 10;
inline constexpr std::uint64_t kWeather = 11;
}  // namespace stream

/// Seeded generator carried by value through the simulation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform01();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double standard_normal();
  double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

  /// Child generator seeded from this one's next output and `stream`.
  Rng split(std::uint64_t stream);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace edgeav
