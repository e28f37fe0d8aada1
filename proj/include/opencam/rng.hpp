#pragma once

#include <cstdint>
#include <vector>

namespace opencam {

/// Pinned deterministic generator: xoshiro256** seeded through SplitMix64.
/// Normal deviates use the Box-Muller transform on two uniform draws. The
/// same seed yields the same stream everywhere; standard-library
/// distributions are deliberately avoided because their output is
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Unbiased integer in [0, n) by rejection; n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Independent stream for (this generator's seed, stream id). Does not
  /// depend on how much of this stream has been consumed.
  Rng child(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

  /// Sub-seeding rule: splitmix64(seed ^ splitmix64(stream + golden)).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace opencam
