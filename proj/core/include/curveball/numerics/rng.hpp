#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace curveball {

/// Counter-based pseudo random generator.
///
/// Sample k of a stream is a pure function of (key, k), so sequences are
/// identical across processes and platforms, and `derive` produces
/// independent streams without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent child stream; `derive(seed, r)` for run r of an experiment.
  Rng derive(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  /// Uniform in [lo, hi); returns lo when lo == hi. Throws InvalidRange if lo > hi.
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Fisher-Yates permutation of [0, n) driven by `rng`.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

}  // namespace curveball
