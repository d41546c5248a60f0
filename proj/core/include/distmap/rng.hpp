#pragma once

#include <cstdint>

namespace distmap {

// Counter-based pseudo-random stream (splitmix64 core). Cheap to construct,
// so simulation work can derive one independent substream per record index
// and stay reproducible regardless of evaluation order.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent stream for (seed, index); distinct indices give decorrelated
  // streams under the same seed.
  static RngStream substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();

  // Uniform draw strictly inside (0,1).
  double uniform();
  double uniform(double lo, double hi);

  // Unbiased integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n);

  // Standard normal via inverse-CDF of a (0,1) uniform.
  double normal();
  double normal(double mean, double sd);

 private:
  std::uint64_t state_;
};

}  // namespace distmap
