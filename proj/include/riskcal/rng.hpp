#pragma once

#include <cstdint>

// Deterministic, hierarchical random number generation.
//
// Simulation results must be bit-identical for a given master seed no matter
// how trials are scheduled across threads, and a trial must be able to open
// the substream for any (role, index) pair on demand without generating the
// draws that would precede it in a serial run. Standard-library distributions
// are implementation-defined, so the generators here are hand-rolled:
// splitmix64 for key mixing and xoshiro256++ for the per-stream engine.
//
// Key discipline: every independent consumer derives its own StreamKey via
// child() and never shares an engine. Derivation is pure integer mixing, so
// opening key.child(7) is O(1) regardless of whether children 0..6 were used.

namespace riskcal {

namespace detail {
// splitmix64 finalizer: bijective 64-bit avalanche mix.
std::uint64_t mix64(std::uint64_t x) noexcept;
}  // namespace detail

// 128-bit address of one random stream. Value type; cheap to copy.
struct StreamKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  // Derives the `index`-th child key. Distinct (key, index) pairs map to
  // distinct-with-overwhelming-probability child keys.
  StreamKey child(std::uint64_t index) const noexcept;
};

// Root key for a user-supplied master seed.
StreamKey master_key(std::uint64_t seed) noexcept;

// xoshiro256++ engine seeded from a StreamKey.
class Rng {
 public:
  explicit Rng(StreamKey key) noexcept;

  std::uint64_t next_u64() noexcept;

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() noexcept;

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) noexcept;

  // One Bernoulli(p) draw; consumes exactly one next_unit() for any p.
  bool bernoulli(double p) noexcept;

  // Uniform integer in [0, n), n >= 1. Rejection sampling (no modulo bias).
  std::uint64_t bounded(std::uint64_t n) noexcept;

  // Number of failures before the first success in independent
  // Bernoulli(success_prob) trials: P(X = k) = (1-q)^k * q with
  // q = success_prob. Requires success_prob in (0, 1]; consumes one
  // next_unit(). Exact inverse-CDF sampling, valid for q down to ~1e-15.
  std::uint64_t geometric_failures(double success_prob) noexcept;

 private:
  std::uint64_t s_[4];
};

}  // namespace riskcal
