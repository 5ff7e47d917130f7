#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qpgp {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a stream key from a seed and an ordered tuple of coordinates,
/// e.g. (step, sample, gate, sign). Streams keyed this way do not depend on
/// the order in which evaluations are scheduled.
constexpr std::uint64_t stream_key(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Portable random stream. Only the engine is taken from the standard library;
/// the distributions below are spelled out so results match across
/// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(mix64(key)) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be nonzero.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qpgp
