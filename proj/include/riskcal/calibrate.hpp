#pragma once

#include <cstdint>
#include <vector>

#include "riskcal/step_loss.hpp"

// Threshold-selection procedures.
//
// All of them search the same exact decomposition: the sum of the table's
// rows is itself a step function, represented as per-segment sums in long
// double. Feasibility of a segment j under level alpha is the comparison
//
//     sums[j] + B  <=  (n+1) * alpha
//
// evaluated entirely in long double. On x86-64 the 64-bit significand makes
// (n+1)*alpha exact for every n + 1 up to 2^11, and sums of integer-valued
// rows (indicator losses) are exact outright — which is why calibrate on
// indicator rows agrees bit-for-bit with conformal_quantile instead of
// merely agreeing to a tolerance.

namespace riskcal {

// Smallest threshold (merged breakpoint or the -inf sentinel) at which the
// inflated empirical risk (n/(n+1)) * R_n(lambda) + B/(n+1) drops to <= alpha.
//
// Requires a monotone table (every row non-increasing); throws
// NonMonotoneError otherwise — selecting a threshold on raw non-monotone
// losses silently breaks the risk guarantee, so it must be asked for
// explicitly via calibrate_monotonized or a prior monotonize_losses call.
// Uses binary search over segments (valid because the summed risk is
// non-increasing); guaranteed to return the same result as a left-to-right
// scan. Throws InfeasibleError (with the minimum achievable inflated risk)
// when even the rightmost segment fails the condition; spec.alpha must be <
// spec.bound and table.bound must be <= spec.bound.
CalibrationResult calibrate(const LossTable& table, const RiskSpec& spec);

// The same infimum taken literally over an arbitrary (possibly non-monotone)
// table: a left-to-right scan for the first feasible segment, no monotonicity
// check. This is the "naive" procedure whose failure on non-monotone losses
// the simulation harness demonstrates; production callers want calibrate or
// calibrate_monotonized instead.
CalibrationResult calibrate_unchecked(const LossTable& table,
                                      const RiskSpec& spec);

// Selection on the monotonized empirical risk
// R_up(lambda) = sup_{t >= lambda} R_n(t):
//
//   correction off: smallest lambda with            R_up(lambda)            <= alpha
//   correction on:  smallest lambda with (n/(n+1)) R_up(lambda) + B/(n+1) <= alpha
//
// The corrected form scales R_up exactly as calibrate scales R_n, so for a
// monotone table (where R_up == R_n) the corrected result is identical to
// calibrate's — that identity is part of the contract and is tested. For any
// table, corrected lambda >= uncorrected lambda (the corrected condition is
// strictly tighter since alpha < B). Input may be non-monotone.
CalibrationResult calibrate_monotonized(const LossTable& table,
                                        const RiskSpec& spec,
                                        bool correction);

// Replaces every row by its pointwise sup over [lambda, inf) — the reverse
// running maximum — and reassembles. Output is monotone; idempotent; rows are
// pointwise >= the input rows, equal iff already non-increasing.
LossTable monotonize_losses(const LossTable& table);

// Largest downward jump of the empirical risk over merged breakpoints:
// max over breakpoints of [left limit of R_n] - [R_n], exactly from segment
// sums; 0 for a table with no breakpoints. For rows with pairwise-disjoint
// breakpoint sets the result is <= B/n (each jump is a single row's drop).
double jump_bound_diagnostic(const LossTable& table);

// Split-conformal threshold: the k-th smallest score, k = ceil((n+1)(1-alpha)).
struct QuantileResult {
  double threshold = kPosInf;   // +inf when the index exceeds n
  bool finite = false;
  std::uint64_t order_index = 0;  // k (1-based)
};

// scores nonempty and finite; alpha in (0,1). When k > n the threshold is the
// +inf sentinel with finite=false (never an error).
QuantileResult conformal_quantile(std::vector<double> scores, double alpha);

namespace detail {

// The summed table as per-segment long-double sums over merged breakpoints:
// sums[0] is the segment below breakpoints[0]; sums[j] holds on
// [breakpoints[j-1], breakpoints[j]).
struct SegmentSums {
  std::vector<double> breakpoints;
  std::vector<long double> sums;  // breakpoints.size() + 1 entries
};
SegmentSums segment_sums(const LossTable& table);

// (n+1) * alpha in long double (exact for n+1 up to 2^11).
long double feasibility_budget(double alpha, std::size_t n) noexcept;

// Largest integer c with c + 1 <= (n+1)*alpha, i.e. the largest count of
// unit-loss rows a feasible segment may carry when B = 1; -1 when none.
// Shares feasibility_budget's arithmetic so counting-based fast paths agree
// exactly with calibrate.
std::int64_t max_feasible_count(double alpha, std::size_t n) noexcept;

// Largest integer c with c <= n * alpha (the uncorrected monotonized
// threshold for unit-loss rows); -1 when none.
std::int64_t max_feasible_count_uncorrected(double alpha,
                                            std::size_t n) noexcept;

// calibrate with a forced left-to-right scan (for the scan/bisection
// agreement property).
CalibrationResult calibrate_scan(const LossTable& table, const RiskSpec& spec);

// Number of breakpoints shared between rows: total over rows minus merged
// count. Zero iff rows have pairwise-disjoint breakpoint sets.
std::uint64_t breakpoint_collisions(const LossTable& table);

}  // namespace detail

}  // namespace riskcal
