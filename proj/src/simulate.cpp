#include "riskcal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "riskcal/binomial.hpp"
#include "riskcal/losses.hpp"

namespace riskcal {

namespace {

constexpr std::size_t kHistogramBins = 20;

// Cap on (N + 1) * (n_cal + 1) cells for materializing the grid scenario.
constexpr unsigned long long kMaterializeCellLimit = 4'000'000ull;

// Runs trial_fn(t) for t in [0, trials), split into contiguous chunks across
// `threads` workers. On failure the exception from the smallest failing trial
// index is rethrown, with InfeasibleError tagged by that trial, so outcomes
// do not depend on scheduling.
template <typename TrialFn>
std::vector<double> run_indexed_trials(std::size_t trials, unsigned threads,
                                       const TrialFn& trial_fn) {
  std::vector<double> losses(trials, 0.0);
  std::mutex error_mutex;
  std::size_t error_trial = static_cast<std::size_t>(-1);
  std::exception_ptr error;

  const auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      try {
        losses[t] = trial_fn(t);
      } catch (const InfeasibleError& e) {
        const std::lock_guard<std::mutex> guard(error_mutex);
        if (t < error_trial) {
          error_trial = t;
          error = std::make_exception_ptr(InfeasibleError(
              std::string(e.what()) + " (trial " + std::to_string(t) + ")",
              e.min_inflated_risk(), t));
        }
        return;
      } catch (...) {
        const std::lock_guard<std::mutex> guard(error_mutex);
        if (t < error_trial) {
          error_trial = t;
          error = std::current_exception();
        }
        return;
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads,
                                      static_cast<unsigned>(std::min<std::size_t>(
                                          trials, 1024))));
  if (workers == 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * chunk;
      if (lo >= trials) break;
      pool.emplace_back(run_range, lo, std::min(trials, lo + chunk));
    }
    for (std::thread& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return losses;
}

}  // namespace

const char* calibrator_name(Calibrator c) noexcept {
  switch (c) {
    case Calibrator::naive:
      return "naive";
    case Calibrator::monotonized:
      return "monotonized";
    case Calibrator::monotonized_corrected:
      return "monotonized-corrected";
  }
  return "naive";
}

void TightnessParams::validate() const {
  if (k < 1) throw std::invalid_argument("TightnessParams: k must be >= 1");
  if (!(eps_prime > 0.0) || !(eps_prime < 1.0)) {
    throw std::invalid_argument("TightnessParams: eps_prime must lie in (0, 1)");
  }
  if (n <= k + 1) {
    throw std::invalid_argument("TightnessParams: n must exceed k + 1");
  }
}

void CounterexampleParams::validate() const {
  if (!(p >= 0.0) || !(p <= 1.0)) {
    throw std::invalid_argument("CounterexampleParams: p must lie in [0, 1]");
  }
  if (N < 1) throw std::invalid_argument("CounterexampleParams: N must be >= 1");
  if (n_cal < 1 || n_cal > 1'000'000) {
    throw std::invalid_argument(
        "CounterexampleParams: n_cal must lie in [1, 1e6]");
  }
  const double alpha_floor = 1.0 / static_cast<double>(n_cal + 1);
  if (!(alpha > alpha_floor) || !(alpha < 1.0)) {
    throw std::invalid_argument(
        "CounterexampleParams: alpha must lie in (1/(n_cal+1), 1) so the top "
        "of the grid is always feasible");
  }
}

void NearMonotoneParams::validate() const {
  if (n < 1) throw std::invalid_argument("NearMonotoneParams: n must be >= 1");
  if (!(bump_height >= 0.0) || !(bump_height <= 1.0)) {
    throw std::invalid_argument(
        "NearMonotoneParams: bump_height must lie in [0, 1]");
  }
  if (!(bump_min <= bump_max) || !std::isfinite(bump_min) ||
      !std::isfinite(bump_max)) {
    throw std::invalid_argument(
        "NearMonotoneParams: need finite bump_min <= bump_max");
  }
  if (!(bump_width > 0.0) || !std::isfinite(bump_width)) {
    throw std::invalid_argument("NearMonotoneParams: bump_width must be > 0");
  }
}

TableGen gen_miscoverage_uniform(std::size_t n) {
  if (n < 1) {
    throw std::invalid_argument("gen_miscoverage_uniform: n must be >= 1");
  }
  return [n](const StreamKey& trial_key) {
    const StreamKey rows_root = trial_key.child(kRowStreams);
    std::vector<StepLoss> rows;
    rows.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      Rng rng(rows_root.child(i));
      rows.push_back(miscoverage_loss(rng.next_unit()));
    }
    return LossTable::assemble(std::move(rows), 1.0);
  };
}

TableGen gen_tightness(const TightnessParams& params) {
  params.validate();
  return [params](const StreamKey& trial_key) {
    const StreamKey rows_root = trial_key.child(kRowStreams);
    const double plateau = static_cast<double>(params.k) /
                           static_cast<double>(params.k + 1);
    std::vector<StepLoss> rows;
    rows.reserve(params.n + 1);
    for (std::size_t i = 0; i <= params.n; ++i) {
      Rng rng(rows_root.child(i));
      const double z = rng.uniform(0.0, 0.5);  // lower knot, in [0, 0.5)
      const double w = rng.uniform(0.5, 1.0);  // upper knot, in [0.5, 1)
      StepLoss row;
      row.breakpoints = {z, w};
      row.values = {1.0, plateau, 0.0};
      rows.push_back(std::move(row));
    }
    return LossTable::assemble(std::move(rows), 1.0);
  };
}

TableGen gen_near_monotone(const NearMonotoneParams& params) {
  params.validate();
  return [params](const StreamKey& trial_key) {
    const StreamKey rows_root = trial_key.child(kRowStreams);
    std::vector<StepLoss> rows;
    rows.reserve(params.n + 1);
    for (std::size_t i = 0; i <= params.n; ++i) {
      Rng rng(rows_root.child(i));
      const double s = rng.next_unit();
      const double b = rng.uniform(params.bump_min, params.bump_max);
      const double e = b + params.bump_width;
      const double h = params.bump_height;
      // Pointwise max of the indicator 1{s > lambda} and a bump of height h
      // on [b, e); the three cases are where s falls relative to the bump.
      StepLoss row;
      if (s >= e) {
        row.breakpoints = {s};
        row.values = {1.0, 0.0};
      } else if (s >= b) {
        row.breakpoints = {s, e};
        row.values = {1.0, h, 0.0};
      } else {
        row.breakpoints = {s, b, e};
        row.values = {1.0, 0.0, h, 0.0};
      }
      rows.push_back(std::move(row));
    }
    return LossTable::assemble(std::move(rows), 1.0);
  };
}

TableGen gen_counterexample(const CounterexampleParams& params) {
  params.validate();
  return [params](const StreamKey& trial_key) {
    const std::size_t n_rows = params.n_cal + 1;
    const std::size_t n_cols = static_cast<std::size_t>(params.N);
    const StreamKey columns_root = trial_key.child(kColumnStreams);
    // Column-major draws so a lazy walker can reproduce any single column
    // without generating the others. Cell (i, j) is row i's value on
    // [j/N, (j+1)/N); the value from 1 upward is 0 for every row.
    std::vector<std::vector<double>> values(
        n_rows, std::vector<double>(n_cols + 1, 0.0));
    for (std::size_t j = 0; j < n_cols; ++j) {
      Rng rng(columns_root.child(j));
      for (std::size_t i = 0; i < n_rows; ++i) {
        values[i][j] = rng.bernoulli(params.p) ? 1.0 : 0.0;
      }
    }
    std::vector<double> breakpoints(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) {
      breakpoints[j] = static_cast<double>(j + 1) / static_cast<double>(n_cols);
    }
    std::vector<StepLoss> rows;
    rows.reserve(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
      StepLoss row;
      row.breakpoints = breakpoints;
      row.values = std::move(values[i]);
      row.domain_min = 0.0;
      rows.push_back(std::move(row));
    }
    return LossTable::assemble(std::move(rows), 1.0);
  };
}

TrialSummary summarize_trials(const std::vector<double>& losses,
                              std::uint64_t seed) {
  TrialSummary out;
  out.trials = losses.size();
  out.seed = seed;
  if (losses.empty()) return out;

  long double sum = 0.0L;
  double lo = losses.front();
  double hi = losses.front();
  for (const double x : losses) {
    sum += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const long double mean = sum / static_cast<long double>(losses.size());
  long double sq = 0.0L;
  for (const double x : losses) {
    const long double d = static_cast<long double>(x) - mean;
    sq += d * d;
  }
  out.mean_risk = static_cast<double>(mean);
  if (losses.size() > 1) {
    const long double var = sq / static_cast<long double>(losses.size() - 1);
    out.std_dev = static_cast<double>(std::sqrt(var));
    out.std_error = static_cast<double>(
        std::sqrt(var) / std::sqrt(static_cast<long double>(losses.size())));
  }

  Histogram& h = out.histogram;
  h.lo = lo;
  h.hi = hi;
  if (lo == hi) {
    h.counts.assign(1, losses.size());
    return out;
  }
  h.counts.assign(kHistogramBins, 0);
  const double width = hi - lo;
  for (const double x : losses) {
    const double rel = (x - lo) / width * static_cast<double>(kHistogramBins);
    std::size_t bin = static_cast<std::size_t>(rel);
    if (bin >= kHistogramBins) bin = kHistogramBins - 1;
    ++h.counts[bin];
  }
  return out;
}

double run_table_trial(const LossTable& table, const RiskSpec& spec,
                       Calibrator cal) {
  if (table.size() < 2) {
    throw std::invalid_argument(
        "run_table_trial: need at least two rows (calibration plus held-out)");
  }
  const LossTable calibration = table.head(table.size() - 1);
  CalibrationResult result;
  switch (cal) {
    case Calibrator::naive:
      result = calibration.monotone ? calibrate(calibration, spec)
                                    : calibrate_unchecked(calibration, spec);
      break;
    case Calibrator::monotonized:
      result = calibrate_monotonized(calibration, spec, /*correction=*/false);
      break;
    case Calibrator::monotonized_corrected:
      result = calibrate_monotonized(calibration, spec, /*correction=*/true);
      break;
  }
  // The sentinel means "feasible everywhere": deploy at the domain start.
  const double at = std::max(result.lambda_hat, table.domain_min);
  return table.rows.back().eval(at);
}

TrialSummary monte_carlo_risk(const TableGen& gen, const RiskSpec& spec,
                              std::size_t trials, Calibrator cal,
                              std::uint64_t master_seed, unsigned threads) {
  spec.validate();
  if (!gen) throw std::invalid_argument("monte_carlo_risk: empty generator");
  if (trials < 1) {
    throw std::invalid_argument("monte_carlo_risk: trials must be >= 1");
  }
  const StreamKey root = master_key(master_seed);
  const std::vector<double> losses =
      run_indexed_trials(trials, threads, [&](std::size_t t) {
        return run_table_trial(gen(root.child(t)), spec, cal);
      });
  return summarize_trials(losses, master_seed);
}

namespace detail {

CxLaw counterexample_law(const CounterexampleParams& params, Calibrator cal) {
  params.validate();
  const std::int64_t max_count =
      cal == Calibrator::monotonized
          ? max_feasible_count_uncorrected(params.alpha, params.n_cal)
          : max_feasible_count(params.alpha, params.n_cal);
  if (max_count < 0) {
    // Unreachable once validate() holds (alpha > 1/(n_cal+1) puts at least
    // count 0 within budget), but kept so the law can never lie.
    throw InfeasibleError("grid scenario: no calibration count meets the level",
                          kPosInf);
  }
  CxLaw law;
  law.max_count = max_count;
  law.q = binomial_cdf(params.n_cal, params.p, max_count);
  return law;
}

double cx_trial_replay(const CounterexampleParams& params, const CxLaw& law,
                       Calibrator cal, const StreamKey& trial_key) {
  const StreamKey columns_root = trial_key.child(kColumnStreams);
  // Reproduces exactly the draws gen_counterexample makes for one column:
  // n_cal calibration cells, then the held-out cell.
  const auto draw_column = [&](std::uint64_t j, std::int64_t& count) {
    Rng rng(columns_root.child(j));
    std::int64_t c = 0;
    for (std::size_t i = 0; i < params.n_cal; ++i) {
      if (rng.bernoulli(params.p)) ++c;
    }
    count = c;
    return rng.bernoulli(params.p) ? 1.0 : 0.0;
  };

  if (cal == Calibrator::naive) {
    // First feasible regime from the left; held-out loss is that column's
    // cell. No feasible Bernoulli column means selecting threshold 1, where
    // every loss is 0 by construction.
    for (std::uint64_t j = 0; j < params.N; ++j) {
      std::int64_t count = 0;
      const double held = draw_column(j, count);
      if (count <= law.max_count) return held;
    }
    return 0.0;
  }

  // Monotonized selection: the suffix maximum of the counts is feasible
  // exactly on the trailing run of low columns, so walk from the top end.
  double last_low_held = 0.0;
  std::uint64_t run = 0;
  for (std::uint64_t j = params.N; j-- > 0;) {
    std::int64_t count = 0;
    const double held = draw_column(j, count);
    if (count > law.max_count) break;
    last_low_held = held;
    ++run;
  }
  if (run == 0) return 0.0;  // selected threshold 1: losses vanish there
  // Threshold (N - run)/N, or the domain start when every column is low; in
  // both cases the held-out loss is the first column of the run.
  return last_low_held;
}

double cx_trial_geometric(const CounterexampleParams& params, const CxLaw& law,
                          Calibrator cal, const StreamKey& trial_key) {
  const double q = static_cast<double>(law.q);
  std::uint64_t selected;  // count of columns before the scan stops
  const double stop_prob = cal == Calibrator::naive ? q : 1.0 - q;
  if (stop_prob <= 0.0) {
    selected = params.N;
  } else if (stop_prob >= 1.0) {
    selected = 0;
  } else {
    Rng rng(trial_key.child(kGeometricStream));
    selected = std::min<std::uint64_t>(params.N,
                                       rng.geometric_failures(stop_prob));
  }
  if (cal == Calibrator::naive) {
    // `selected` plays j*: the first feasible regime. Hitting N means
    // threshold 1, where the loss is deterministically 0.
    if (selected >= params.N) return 0.0;
  } else {
    // `selected` plays the trailing-run length; an empty run means
    // threshold 1 again.
    if (selected == 0) return 0.0;
  }
  Rng held(trial_key.child(kHeldoutStream));
  return held.bernoulli(params.p) ? 1.0 : 0.0;
}

}  // namespace detail

TrialSummary counterexample_monte_carlo(const CounterexampleParams& params,
                                        std::size_t trials, Calibrator cal,
                                        std::uint64_t master_seed,
                                        unsigned threads, CxTier tier) {
  params.validate();
  if (trials < 1) {
    throw std::invalid_argument(
        "counterexample_monte_carlo: trials must be >= 1");
  }
  if (tier == CxTier::automatic) {
    const unsigned long long cells =
        params.N >= kMaterializeCellLimit
            ? kMaterializeCellLimit + 1
            : (params.N + 1) * static_cast<unsigned long long>(params.n_cal + 1);
    tier = cells <= kMaterializeCellLimit ? CxTier::materialized
                                          : CxTier::geometric;
  }
  const StreamKey root = master_key(master_seed);
  std::vector<double> losses;
  if (tier == CxTier::materialized) {
    const RiskSpec spec{params.alpha, 1.0};
    const TableGen gen = gen_counterexample(params);
    losses = run_indexed_trials(trials, threads, [&](std::size_t t) {
      return run_table_trial(gen(root.child(t)), spec, cal);
    });
  } else {
    const detail::CxLaw law = detail::counterexample_law(params, cal);
    const bool replay = tier == CxTier::replay;
    losses = run_indexed_trials(trials, threads, [&](std::size_t t) {
      const StreamKey trial_key = root.child(t);
      return replay ? detail::cx_trial_replay(params, law, cal, trial_key)
                    : detail::cx_trial_geometric(params, law, cal, trial_key);
    });
  }
  return summarize_trials(losses, master_seed);
}

double closed_form_counterexample_risk(const CounterexampleParams& params) {
  const detail::CxLaw law =
      detail::counterexample_law(params, Calibrator::naive);
  // p * (1 - (1-q)^N): the held-out cell at the first feasible column is an
  // independent Bernoulli(p); only the all-columns-high event escapes to the
  // loss-free top of the grid. expm1/log1p keep precision for tiny q.
  if (law.q >= 1.0L) return params.p;
  const long double log_one_minus_q = std::log1p(-law.q);
  const long double risk =
      static_cast<long double>(params.p) *
      (-std::expm1(static_cast<long double>(params.N) * log_one_minus_q));
  return static_cast<double>(risk);
}

std::uint64_t counterexample_sufficient_N(std::size_t n_cal, double p,
                                          double alpha) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::invalid_argument(
        "counterexample_sufficient_N: p must lie strictly inside (0, 1)");
  }
  CounterexampleParams probe;
  probe.p = p;
  probe.N = 1;
  probe.n_cal = n_cal;
  probe.alpha = alpha;
  const detail::CxLaw law =
      detail::counterexample_law(probe, Calibrator::naive);
  // With p in (0,1), q = P(Binomial(n_cal, p) <= max_count) is strictly
  // inside (0,1) unless it underflows.
  if (!(law.q > 0.0L)) {
    throw std::overflow_error(
        "counterexample_sufficient_N: feasible-column probability underflows; "
        "no representable N is sufficient");
  }
  if (law.q >= 1.0L) return 1;
  const long double target = std::log1p(-static_cast<long double>(p));  // < 0
  const long double step = std::log1p(-law.q);                          // < 0
  const long double raw = std::floor(target / step);
  if (!(raw < 9.0e18L)) {
    throw std::overflow_error(
        "counterexample_sufficient_N: required N exceeds the representable "
        "range");
  }
  std::uint64_t n = static_cast<std::uint64_t>(std::max(0.0L, raw)) + 1;
  const auto sufficient = [&](std::uint64_t candidate) {
    return static_cast<long double>(candidate) * step <= target;
  };
  while (n > 1 && sufficient(n - 1)) --n;
  while (!sufficient(n)) ++n;
  return n;
}

JumpLemmaReport verify_jump_lemma(const TableGen& gen, std::size_t trials,
                                  std::uint64_t master_seed) {
  if (!gen) throw std::invalid_argument("verify_jump_lemma: empty generator");
  if (trials < 1) {
    throw std::invalid_argument("verify_jump_lemma: trials must be >= 1");
  }
  const StreamKey root = master_key(master_seed);
  JumpLemmaReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const LossTable table = gen(root.child(t));
    report.max_jump = std::max(report.max_jump, jump_bound_diagnostic(table));
    report.collisions += detail::breakpoint_collisions(table);
  }
  return report;
}

}  // namespace riskcal
