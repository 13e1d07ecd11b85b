#include "riskcal/binomial.hpp"

#include <cmath>
#include <stdexcept>

namespace riskcal {

long double binomial_cdf(std::uint64_t n, double p, std::int64_t m) {
  if (n == 0 || n > 1000000ull) {
    throw std::invalid_argument("binomial_cdf: n must be in [1, 1e6]");
  }
  if (std::isnan(p) || p < 0.0 || p > 1.0) {
    throw std::invalid_argument("binomial_cdf: p must be in [0, 1]");
  }
  if (m < 0) return 0.0L;
  if (m >= static_cast<std::int64_t>(n)) return 1.0L;
  if (p <= 0.0) return 1.0L;  // all mass at 0 <= m
  if (p >= 1.0) return 0.0L;  // all mass at n > m

  const long double lp = std::log(static_cast<long double>(p));
  const long double lq = std::log1p(-static_cast<long double>(p));
  const long double lg_n1 = std::lgamma(static_cast<long double>(n) + 1.0L);

  // Running log-sum-exp over k = 0..m of the log pmf.
  long double lsum = 0.0L;
  bool have = false;
  for (std::int64_t k = 0; k <= m; ++k) {
    const long double lk = static_cast<long double>(k);
    const long double lterm = lg_n1 - std::lgamma(lk + 1.0L) -
                              std::lgamma(static_cast<long double>(n) - lk + 1.0L) +
                              lk * lp + (static_cast<long double>(n) - lk) * lq;
    if (!have) {
      lsum = lterm;
      have = true;
    } else if (lterm > lsum) {
      lsum = lterm + std::log1p(std::exp(lsum - lterm));
    } else {
      lsum = lsum + std::log1p(std::exp(lterm - lsum));
    }
  }
  long double out = std::exp(lsum);
  if (out < 0.0L) out = 0.0L;
  if (out > 1.0L) out = 1.0L;
  return out;
}

}  // namespace riskcal
