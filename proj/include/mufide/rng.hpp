#pragma once

#include <cstdint>

namespace mufide {

// Deterministic counter-based generator (SplitMix64, Steele et al. constants).
// Every stochastic component in the library draws from this type, so a run is
// reproducible bit-for-bit from its seeds alone, independent of platform RNG
// libraries and thread count.
//
// Draw order is part of each caller's documented contract; the generator
// itself guarantees: same seed => same sequence of next_u64() values.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit mantissa resolution.
  double uniform01();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer on [0, n); n must be positive. Rejection-free modulo is
  // acceptable here: n is always tiny relative to 2^64 in this library.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller. Consumes exactly two uniform draws per
  // call (no cached spare), keeping the draw count predictable.
  double normal();

  double normal(double mean, double stddev);

  // Child stream: mixes the salt through one SplitMix64 step of a copy of the
  // current state. Children with distinct salts are decorrelated from each
  // other and from the parent, and do not advance the parent.
  Rng derive(std::uint64_t salt) const;

 private:
  std::uint64_t state_;
};

}  // namespace mufide
