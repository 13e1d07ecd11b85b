#pragma once

#include <cstdint>

namespace riskcal {

// P[Binomial(n, p) <= m], evaluated by exact log-space summation: each term
// exp(lgamma-based log binomial pmf) is accumulated with a running
// log-sum-exp in long double, so no normal approximation and no intermediate
// underflow for the extreme tails this library relies on (tail masses of
// ~1e-9 enter closed-form risk expressions that are compared against Monte
// Carlo estimates).
//
// Supports n up to 10^6. Degenerate inputs take their limit values:
// m < 0 -> 0, m >= n -> 1, p <= 0 -> 1, p >= 1 -> 0 (for 0 <= m < n).
long double binomial_cdf(std::uint64_t n, double p, std::int64_t m);

}  // namespace riskcal
