#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace stnet {

/// SplitMix64 finalizer. Used for seeding and for deriving child seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Order-sensitive combination of two seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// xoshiro256** (Blackman & Vigna), state expanded from one 64-bit seed with
/// SplitMix64. Satisfies UniformRandomBitGenerator so it plugs into <random>
/// distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal deviate (Marsaglia polar method).
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Uniformly random permutation of [0, n) (Fisher-Yates).
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

/// `count` distinct values from [0, n), uniform without replacement, in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

}  // namespace stnet
