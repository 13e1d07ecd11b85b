#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskcal/simulate.hpp"
#include "riskcal/table_io.hpp"

// Repeated-random-split evaluation of a fixed loss table: per trial, shuffle
// the rows, calibrate on the first n_cal, and score the remaining rows at the
// selected threshold. The aggregate answers "does the guarantee hold on this
// dataset" the same way the Monte Carlo harness answers it for synthetic
// scenarios.
//
// Determinism: trial t shuffles with the substream
// master_key(seed).child(t).child(kPermutationStream), so reports are
// byte-identical across runs and thread counts, and a T-trial run equals the
// concatenation of T single-trial runs.

namespace riskcal {

struct SplitEvalConfig {
  std::size_t n_cal = 1;     // calibration rows per split
  std::size_t trials = 1;    // number of random splits
  double alpha = 0.1;
  std::uint64_t seed = 0;    // required: no silent entropy
  unsigned threads = 1;
  Calibrator calibrator = Calibrator::naive;

  // n_cal >= 1 and < n_total; trials >= 1. Throws std::invalid_argument.
  void validate(std::size_t n_total) const;
};

struct SplitTrialRecord {
  std::size_t trial = 0;
  double lambda_hat = kNegInf;  // -inf when the selection is the sentinel
  bool sentinel = false;
  double test_risk = 0.0;       // mean test-row loss at the deployed threshold
  std::optional<double> mean_set_size;  // when size curves are attached
};

// Distribution of the selected threshold across trials. min/max/mean cover
// the finite selections only; sentinel trials are counted separately.
struct LambdaSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t finite_trials = 0;
  std::size_t sentinel_trials = 0;
};

struct SplitEvalReport {
  std::size_t n_total = 0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  double alpha = 0.0;
  double bound = 1.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  Calibrator calibrator = Calibrator::naive;

  TrialSummary risk;      // across trials' test risks
  LambdaSummary lambda_hat;
  double band_lower = 0.0;  // alpha - 2 * bound / (n_cal + 1)
  double band_upper = 0.0;  // alpha
  std::optional<double> mean_set_size;  // mean of per-trial means

  std::vector<SplitTrialRecord> records;  // one per trial, in trial order
};

// One split: shuffle, calibrate on the first n_cal rows (the naive calibrator
// is the checked production procedure here and throws NonMonotoneError on a
// non-monotone table), evaluate the rest. Throws InfeasibleError tagged with
// the trial index when the calibration split cannot meet the level.
SplitTrialRecord split_eval_trial(const ParsedTable& data,
                                  const SplitEvalConfig& config,
                                  std::size_t trial);

// All trials plus aggregation. Exceptions surface from the smallest failing
// trial index regardless of thread count.
SplitEvalReport split_evaluate(const ParsedTable& data,
                               const SplitEvalConfig& config);

// Writes report.json, risk_hist.csv, and trials.csv into out_dir (created if
// missing). Output is deterministic: no timestamps, fixed field order,
// shortest-round-trip numbers.
void write_split_report(const SplitEvalReport& report,
                        const std::string& out_dir);

// The exact text written to report.json (the CLI also prints it to stdout).
std::string split_report_json_text(const SplitEvalReport& report);

}  // namespace riskcal
