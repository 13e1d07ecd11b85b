#include "riskcal/rng.hpp"

#include <cmath>

namespace riskcal {

namespace detail {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

StreamKey StreamKey::child(std::uint64_t index) const noexcept {
  using detail::mix64;
  // Two rounds of cross-coupled mixing so that (hi, lo, index) all avalanche
  // into both output words.
  std::uint64_t a = mix64(hi ^ mix64(index));
  std::uint64_t b = mix64(lo ^ mix64(index ^ 0xD1B54A32D192ED03ull));
  StreamKey out;
  out.hi = mix64(a + 0x2545F4914F6CDD1Dull * b);
  out.lo = mix64(b + 0x9E3779B97F4A7C15ull * a);
  return out;
}

StreamKey master_key(std::uint64_t seed) noexcept {
  using detail::mix64;
  StreamKey k;
  k.hi = mix64(seed);
  k.lo = mix64(seed ^ 0x6A09E667F3BCC909ull);
  return k;
}

Rng::Rng(StreamKey key) noexcept {
  using detail::mix64;
  s_[0] = mix64(key.hi);
  s_[1] = mix64(key.hi ^ 0xBB67AE8584CAA73Bull);
  s_[2] = mix64(key.lo);
  s_[3] = mix64(key.lo ^ 0x3C6EF372FE94F82Bull);
  // xoshiro256++ requires a nonzero state; mix64 makes all-zero astronomically
  // unlikely, but the guard keeps the engine well-defined for every key.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

namespace {
inline std::uint64_t rotl64(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl64(s_[3], 45);
  return result;
}

double Rng::next_unit() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * next_unit();
}

bool Rng::bernoulli(double p) noexcept { return next_unit() < p; }

std::uint64_t Rng::bounded(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Reject draws below 2^64 mod n so the remainder is exactly uniform.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t Rng::geometric_failures(double success_prob) noexcept {
  if (success_prob >= 1.0) return 0;
  const double u = next_unit();  // u in [0,1), so 1-u in (0,1]
  // Inverse CDF: X = floor(log(1-u) / log(1-q)). Both logs are negative;
  // log1p keeps full precision for small q.
  const double x = std::floor(std::log1p(-u) / std::log1p(-success_prob));
  if (x >= 9.0e18) return 9000000000000000000ull;  // cap; unreachable for q > 1e-15
  return static_cast<std::uint64_t>(x);
}

}  // namespace riskcal
