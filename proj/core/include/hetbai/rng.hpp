#pragma once

#include <cstdint>
#include <limits>

namespace hetbai {

/// SplitMix64 finalizer; used for seeding and for deriving independent
/// stream seeds from (base seed, key, key).
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Derives the seed of stream (a, b) from a base seed. Episodes use
/// a = client index and b = stream kind, so reproducibility does not depend
/// on how episodes are distributed over workers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0) noexcept;

/// xoshiro256** with portable, fully specified variate generation.
///
/// Uniform reals use the top 53 bits; integers in [0, n) use rejection on
/// the 64-bit output; Gaussians use the Box-Muller transform and cache the
/// sine branch for the next call. Nothing goes through <random>
/// distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept;
  double uniform01() noexcept;                   // [0, 1)
  double uniform(double lo, double hi) noexcept;  // [lo, hi)
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  double gaussian() noexcept;                    // N(0, 1)

 private:
  std::uint64_t s_[4];
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace hetbai
