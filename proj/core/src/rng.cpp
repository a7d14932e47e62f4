#include "edgeav/rng.hpp"

namespace edgeav {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) noexcept {
  return mix64(mix64(mix64(master) ^ stream) + index);
}

double Rng::uniform01() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

int Rng::uniform_int(int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  return dist(engine_);
}

double Rng::standard_normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

Rng Rng::split(std::uint64_t stream) { return Rng(derive_seed(engine_(), stream)); }

}  // namespace edgeav
