#include "mufide/rng.hpp"

#include <cmath>
#include <numbers>

namespace mufide {

std::uint64_t Rng::next_u64() {
  // SplitMix64: state advances by the golden-gamma increment, output is the
  // finalizer of the new state.
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) { return next_u64() % n; }

double Rng::normal() {
  // Box-Muller; u1 is nudged away from 0 so log() stays finite.
  double u1 = uniform01();
  double u2 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

Rng Rng::derive(std::uint64_t salt) const {
  Rng child(state_ ^ (0xD1B54A32D192ED03ULL * (salt + 1)));
  // Burn one output so consecutive salts do not hand children raw
  // consecutive counter states.
  child.next_u64();
  return child;
}

}  // namespace mufide
