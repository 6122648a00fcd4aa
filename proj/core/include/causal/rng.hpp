#pragma once

#include <cstdint>
#include <random>

namespace causal {

/// Reproducible random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The engine is seeded through std::seed_seq (also fully specified)
/// from the two 32-bit halves of the seed. Uniforms and normals are derived
/// here rather than through <random> distributions, whose algorithms are
/// implementation-defined, so streams match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Substream for replication `index`: seeded with seed + index.
  static Rng substream(std::uint64_t seed, std::uint64_t index) { return Rng(seed + index); }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the Box-Muller transform; the second variate is cached.
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace causal
