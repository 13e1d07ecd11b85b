#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "riskcal/calibrate.hpp"
#include "riskcal/rng.hpp"
#include "riskcal/step_loss.hpp"

// Monte Carlo harness: scenario generators, the calibrate-then-evaluate trial
// loop, and closed-form references for the adversarial scenario.
//
// Determinism contract: a trial's draws depend only on (master_seed, trial
// index, stream role, element index), never on scheduling. Trial t derives
// its key as master_key(seed).child(t); within a trial, each consumer opens
// its own role substream. Results are therefore bit-identical across thread
// counts and across runs.

namespace riskcal {

// Stream roles under a per-trial key.
inline constexpr std::uint64_t kColumnStreams = 0;      // grid scenario: one stream per column
inline constexpr std::uint64_t kGeometricStream = 1;    // lazy grid scenario: regime-index draw
inline constexpr std::uint64_t kHeldoutStream = 2;      // lazy grid scenario: held-out cell draw
inline constexpr std::uint64_t kRowStreams = 3;         // row scenarios: one stream per sample
inline constexpr std::uint64_t kPermutationStream = 4;  // split evaluation: the data shuffle

// Which threshold-selection procedure a trial runs on its calibration rows.
//
//   naive                  plain selection on the raw empirical risk: the
//                          production procedure when the table is monotone,
//                          the literal unchecked scan when it is not (the
//                          failure mode the grid scenario demonstrates)
//   monotonized            calibrate_monotonized, correction off
//   monotonized_corrected  calibrate_monotonized, correction on
enum class Calibrator { naive, monotonized, monotonized_corrected };

const char* calibrator_name(Calibrator c) noexcept;

// Scenario generator: builds one trial's full table (n calibration rows plus
// one held-out row, in that order) from the trial's stream key.
using TableGen = std::function<LossTable(const StreamKey& trial_key)>;

// Scenario where the guarantee's slack can be made arbitrarily small: rows
// take values {1, k/(k+1), 0} with the upper breakpoint uniform on (0.5, 1),
// evaluated at the level alpha() = (k + 1 - eps_prime) / (n + 1) that parks
// the selection exactly at an order statistic.
struct TightnessParams {
  std::uint64_t k = 1;       // plateau value k/(k+1)
  double eps_prime = 0.5;    // in (0,1): how far alpha sits below the knot
  std::size_t n = 10;        // calibration rows per trial

  double alpha() const noexcept {
    return (static_cast<double>(k + 1) - eps_prime) / static_cast<double>(n + 1);
  }
  void validate() const;  // k >= 1, eps_prime in (0,1), n > k + 1
};

// Adversarial grid scenario: each sample's loss is an independent
// Bernoulli(p) cell at every grid threshold j/N (j < N) and exactly 0 from
// threshold 1 upward. Rows are wildly non-monotone; the naive procedure's
// risk approaches p as N grows.
struct CounterexampleParams {
  double p = 0.5;            // cell success probability, in [0, 1]
  std::uint64_t N = 16;      // grid resolution: thresholds j/N, j = 1..N
  std::size_t n_cal = 10;    // calibration rows per trial
  double alpha = 0.3;        // level; must lie in (1/(n_cal+1), 1)

  void validate() const;
};

// Nearly-monotone scenario: a monotone indicator 1{s > lambda} plus a small
// bump of height `bump_height` on [b, b + bump_width) with b uniform on
// [bump_min, bump_max). The monotonized procedures absorb the bump at a
// bounded cost in risk.
struct NearMonotoneParams {
  std::size_t n = 100;        // calibration rows per trial
  double bump_height = 0.5;
  double bump_min = 0.6;
  double bump_max = 0.7;
  double bump_width = 0.1;

  void validate() const;
};

// Row scenario generators (n + 1 rows: calibration rows then one held-out).
TableGen gen_miscoverage_uniform(std::size_t n);
TableGen gen_tightness(const TightnessParams& params);
TableGen gen_near_monotone(const NearMonotoneParams& params);
// Grid scenario generator; materializes all (n_cal + 1) * (N + 1) cells.
// counterexample_monte_carlo switches to a lazy equivalent for large N.
TableGen gen_counterexample(const CounterexampleParams& params);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::uint64_t> counts;  // equal-width bins over [lo, hi]
};

// Aggregate of one Monte Carlo run's per-trial held-out losses.
struct TrialSummary {
  double mean_risk = 0.0;
  double std_dev = 0.0;    // sample standard deviation (ddof = 1); 0 if trials < 2
  double std_error = 0.0;  // std_dev / sqrt(trials)
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  Histogram histogram;
};

// Mean / spread / histogram of per-trial losses (long-double two-pass sums,
// so the result is independent of how trials were scheduled).
TrialSummary summarize_trials(const std::vector<double>& losses,
                              std::uint64_t seed);

// One trial: calibrate on all rows but the last, then evaluate the last row
// at the selected threshold (at the table's domain start when the selection
// is the everywhere-feasible sentinel). Throws InfeasibleError if the
// calibration rows cannot meet the level.
double run_table_trial(const LossTable& table, const RiskSpec& spec,
                       Calibrator cal);

// Runs `trials` independent trials of `gen` and summarizes the held-out
// losses. Exceptions inside a trial are rethrown tagged with the smallest
// failing trial index regardless of thread count.
TrialSummary monte_carlo_risk(const TableGen& gen, const RiskSpec& spec,
                              std::size_t trials, Calibrator cal,
                              std::uint64_t master_seed, unsigned threads = 1);

// How counterexample_monte_carlo realizes a trial.
//
//   materialized  build the full table and run the real calibrators
//   replay        walk the same per-column streams lazily; integer count
//                 thresholds reproduce the materialized result bit-for-bit
//   geometric     sample the selected regime index directly from its
//                 distribution (O(1) per trial; equal in law, not in draws)
//   automatic     materialized when the cell count is small, else geometric
enum class CxTier { automatic, materialized, replay, geometric };

// Monte Carlo for the adversarial grid scenario at any N (B = 1,
// spec.alpha = params.alpha). The lazy tiers exist because interesting grids
// have billions of columns; `replay` is the bridge that proves the lazy
// threshold logic against the materialized calibrators in tests.
TrialSummary counterexample_monte_carlo(const CounterexampleParams& params,
                                        std::size_t trials, Calibrator cal,
                                        std::uint64_t master_seed,
                                        unsigned threads = 1,
                                        CxTier tier = CxTier::automatic);

// Exact expected held-out risk of the naive procedure on the grid scenario:
// p * (1 - (1-q)^N), where q is the probability that a column's calibration
// count is feasible.
double closed_form_counterexample_risk(const CounterexampleParams& params);

// Smallest N such that a feasible column exists with probability >= p
// (equivalently (1-q)^N <= 1-p), which pushes the naive procedure's risk to
// at least p^2. Requires p strictly inside (0, 1) and alpha in
// (1/(n_cal+1), 1); throws std::overflow_error if no representable N works.
std::uint64_t counterexample_sufficient_N(std::size_t n_cal, double p,
                                          double alpha);

struct JumpLemmaReport {
  double max_jump = 0.0;         // largest risk drop seen in any trial
  std::uint64_t collisions = 0;  // cross-row shared breakpoints, all trials
  std::size_t trials = 0;
};

// Generates `trials` tables and records the largest downward jump of the
// summed risk plus the number of cross-row breakpoint collisions. With
// continuous draws collisions are almost surely zero, and every jump is then
// a single row's drop: at most bound / (rows per table).
JumpLemmaReport verify_jump_lemma(const TableGen& gen, std::size_t trials,
                                  std::uint64_t master_seed);

namespace detail {

// Column law of the grid scenario under one calibrator: a column is "low"
// (feasible) iff its calibration count is <= max_count, which happens with
// probability q = BinomialCDF(n_cal, p, max_count).
struct CxLaw {
  std::int64_t max_count = 0;
  long double q = 0.0L;
};
CxLaw counterexample_law(const CounterexampleParams& params, Calibrator cal);

// Lazy single-trial evaluations (see CxTier).
double cx_trial_replay(const CounterexampleParams& params, const CxLaw& law,
                       Calibrator cal, const StreamKey& trial_key);
double cx_trial_geometric(const CounterexampleParams& params, const CxLaw& law,
                          Calibrator cal, const StreamKey& trial_key);

}  // namespace detail

}  // namespace riskcal
