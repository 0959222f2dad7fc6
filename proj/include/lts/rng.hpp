#pragma once

#include <cstdint>
#include <random>

namespace lts {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `(a, b)` under `master`. Streams for different keys are
/// statistically independent, and adding keys never perturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

/// One random stream per run. All draws are built from raw 64-bit engine
/// output so results do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform on {0, ..., n-1}; n > 0.
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  /// Number of failures before the first success of a Bernoulli(p) sequence.
  /// Used to skip over long runs of rare events. Returns UINT64_MAX for p <= 0.
  std::uint64_t geometric_skip(double p);

  std::uint64_t binomial(std::uint64_t trials, double p);

  /// For standard-library distributions where portability of the exact
  /// stream across toolchains does not matter (population generation).
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lts
