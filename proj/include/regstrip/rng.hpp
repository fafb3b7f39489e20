#pragma once

#include <cmath>
#include <cstdint>

namespace regstrip {

/// Counter-based generator. Output k of stream s under seed S is
///
///   key  = mix64(S ^ mix64(s + 0x632BE59BD9B4E019))
///   x_k  = mix64(key + (k + 1) * 0x9E3779B97F4A7C15)
///
/// where mix64 is the SplitMix64 finalizer. Every draw is a pure function of
/// (seed, stream, counter), so results do not depend on platform, standard
/// library, or how work is split across threads. Uniform doubles take the top
/// 53 bits.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL))) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n) % n; }

  /// Standard normal by Box-Muller (two uniforms per draw, no caching).
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace regstrip
