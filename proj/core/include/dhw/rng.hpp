#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace dhw {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for the stream identified by `path` under `seed`, e.g.
/// derive_seed(seed, {stage, point}). Independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Seeded random source. The distributions are implemented here rather than
/// through <random> distributions so sequences are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  double normal(double mean = 0.0, double sd = 1.0);

  /// Knuth's method; fine for the small means used by the tap generator.
  int poisson(double mean);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dhw
