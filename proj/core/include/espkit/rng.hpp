// Copyright 2026 The espkit Authors
// Licensed under the Apache License, Version 2.0

#ifndef ESPKIT_RNG_HPP
#define ESPKIT_RNG_HPP

#include <cstdint>
#include <span>
#include <stdexcept>

namespace esp {

/// Deterministic 64-bit generator (xoshiro256++ seeded through splitmix64).
///
/// Everything stochastic in the library draws from this generator so that a
/// (masterSeed, streamIndex) pair reproduces the same bytes on any platform
/// and under any thread count. Standard-library distributions are avoided on
/// purpose: their output is implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  /// Independent substream r of a master seed. Used for replications,
  /// sweep rows and per-sample streams.
  static Rng stream(std::uint64_t master_seed, std::uint64_t stream_index) {
    std::uint64_t sm = master_seed;
    std::uint64_t a = splitmix64(sm);
    sm = stream_index + 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(sm);
    return Rng(a ^ (b + 0x2545f4914f6cdd1dULL));
  }

  /// Two-level substream, e.g. (row, replication).
  static Rng stream(std::uint64_t master_seed, std::uint64_t outer,
                    std::uint64_t inner) {
    std::uint64_t sm = master_seed + 0x9e3779b97f4a7c15ULL * (outer + 1);
    return stream(splitmix64(sm), inner);
  }

  std::uint64_t operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % n;
    }
  }

  /// Index sampled from a finite distribution given as probabilities
  /// summing to ~1 (CDF inversion; the tail absorbs rounding slack).
  int categorical(std::span<const double> probs) {
    const double u = uniform01();
    double cdf = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cdf += probs[i];
      if (u < cdf) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace esp

#endif  // ESPKIT_RNG_HPP
