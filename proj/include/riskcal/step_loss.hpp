#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Core value types: exact step-function losses and the calibration inputs /
// outputs built from them.
//
// A loss curve is represented exactly as a right-continuous piecewise-constant
// function of a scalar threshold ("lambda"), not as samples on a grid. The
// threshold-selection routines in calibrate.hpp search merged breakpoints, so
// their infima are attained exactly and comparisons never involve an epsilon.

namespace riskcal {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// One sample's loss as a function of lambda.
//
//   value on [breakpoints[j-1], breakpoints[j])  == values[j]   (0 < j < m+1)
//   value on [breakpoints[m-1], +inf)            == values[m]
//   value on [domain_min, breakpoints[0])        == values[0]
//
// so values has exactly breakpoints.size() + 1 entries and the function is
// right-continuous at every breakpoint. domain_min marks where the
// description starts; it is -inf unless the curve is only defined from some
// finite threshold upward. A StepLoss with no breakpoints is a constant.
struct StepLoss {
  std::vector<double> breakpoints;  // strictly increasing, finite
  std::vector<double> values;       // breakpoints.size() + 1 finite entries
  double domain_min = kNegInf;

  // Checks the representation invariants; throws std::invalid_argument with a
  // description of the first violation.
  void validate() const;

  // Right-continuous evaluation. Throws std::domain_error for NaN lambda or
  // lambda < domain_min.
  double eval(double lambda) const;

  bool non_increasing() const noexcept;
  double max_value() const noexcept;
  double min_value() const noexcept;

  // Merges adjacent segments with equal values. Canonical form makes
  // structural equality meaningful: two StepLoss describing the same function
  // over the same domain compare equal after canonical().
  StepLoss canonical() const;

  // Pointwise sup over [lambda, +inf): the running maximum from the right,
  // re-canonicalized. Non-increasing by construction; idempotent; pointwise
  // >= the input, with equality iff the input is already non-increasing.
  StepLoss monotonized() const;

  static StepLoss constant(double value, double domain_min = kNegInf);

  bool operator==(const StepLoss&) const = default;
};

// Pointwise maximum of two step functions (domain = the more restrictive of
// the two); result is canonical.
StepLoss step_max(const StepLoss& a, const StepLoss& b);

// Target risk level and the uniform loss bound B.
struct RiskSpec {
  double alpha = 0.0;
  double bound = 1.0;  // B: sup of every loss value

  // alpha must be finite and < bound; bound finite. (alpha may be negative:
  // losses are only required to be bounded above.)
  void validate() const;
};

// The calibration input: n loss rows sharing the bound B.
struct LossTable {
  std::vector<StepLoss> rows;  // canonical; n >= 1
  double bound = 1.0;          // B; every value in every row is <= bound
  double domain_min = kNegInf; // max over rows: smallest deployable threshold
  double min_value = 0.0;      // diagnostic: smallest value in any row
  bool monotone = false;       // verified: every row non-increasing

  // Validates and canonicalizes the rows, verifies values <= bound, and
  // computes the monotone flag. Throws std::invalid_argument naming the
  // offending row on any violation.
  static LossTable assemble(std::vector<StepLoss> rows, double bound);

  std::size_t size() const noexcept { return rows.size(); }

  // Table of rows [0, k) (shares the same bound). k >= 1 required.
  LossTable head(std::size_t k) const;
};

// Sorted, deduplicated union of all rows' breakpoints.
std::vector<double> merged_breakpoints(const LossTable& table);

// Mean of row evaluations at lambda (accumulated in long double).
double empirical_risk(const LossTable& table, double lambda);

// Result of a threshold-selection procedure.
//
// lambda_hat == -inf is the "condition holds everywhere" sentinel: the
// feasibility condition is satisfied on the whole domain, so the infimum has
// no finite minimizer. Deployments should then use the table's domain_min.
struct CalibrationResult {
  double lambda_hat = kNegInf;
  double empirical_risk = 0.0;  // empirical (or monotonized) risk at lambda_hat
  double inflated_risk = 0.0;   // the thresholded statistic at lambda_hat
  std::optional<std::size_t> attained_breakpoint;  // merged-bp index; empty if sentinel

  bool sentinel() const noexcept { return lambda_hat == kNegInf; }
};

// The feasibility condition failed at every threshold, +inf limit included.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& message, double min_inflated_risk,
                  std::optional<std::uint64_t> trial = std::nullopt)
      : std::runtime_error(message),
        min_inflated_risk_(min_inflated_risk),
        trial_(trial) {}

  // Smallest achievable value of the thresholded statistic; how far the
  // request was from feasible.
  double min_inflated_risk() const noexcept { return min_inflated_risk_; }

  // Set when the error surfaced inside a Monte Carlo / split-evaluation trial.
  std::optional<std::uint64_t> trial() const noexcept { return trial_; }

 private:
  double min_inflated_risk_;
  std::optional<std::uint64_t> trial_;
};

// A procedure that requires non-increasing rows was handed a table whose
// monotone flag is false.
class NonMonotoneError : public std::invalid_argument {
 public:
  explicit NonMonotoneError(std::size_t row_index)
      : std::invalid_argument(
            "table is not monotone (row " + std::to_string(row_index) +
            " increases somewhere); run monotonize_losses or use "
            "calibrate_monotonized"),
        row_index_(row_index) {}

  std::size_t row_index() const noexcept { return row_index_; }

 private:
  std::size_t row_index_;
};

}  // namespace riskcal
