#include "distmap/rng.hpp"

#include <stdexcept>

#include "distmap/math.hpp"

namespace distmap {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : state_(mix64(seed + kGamma)) {}

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t index) {
  RngStream r(seed);
  r.state_ = mix64(r.state_ + kGamma * (index + 1));
  return r;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform() {
  // 53-bit mantissa draw shifted into the open interval (0,1).
  return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return draw % n;
}

double RngStream::normal() { return math::norm_ppf(uniform()); }

double RngStream::normal(double mean, double sd) {
  return mean + sd * normal();
}

}  // namespace distmap
