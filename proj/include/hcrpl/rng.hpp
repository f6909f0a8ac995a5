// Seeded random number generation. Everything downstream requires that the
// same seed reproduces the same stream on every platform, so Gaussian draws
// use an explicit Box-Muller transform instead of std::normal_distribution
// (whose output is implementation-defined).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hcrpl {

// Derives one stream seed per (seed, stream) pair; splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t reject_under = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= reject_under) return r % n;
    }
  }

  // Standard normal. Box-Muller on (0,1] x [0,1); the sine branch is
  // discarded so the draw count per call is fixed.
  double gaussian() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hcrpl
