#include "riskcal/split_eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

namespace riskcal {

namespace {

using nlohmann::ordered_json;

std::vector<std::size_t> trial_permutation(std::size_t n,
                                           const StreamKey& trial_key) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(trial_key.child(kPermutationStream));
  // Fisher-Yates; bounded() is rejection-sampled, so the permutation is
  // exactly uniform and identical on every platform.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

double checked_json_number(double v) {
  // JSON has no inf/nan; report fields that could be non-finite are emitted
  // as null by the caller instead.
  return v;
}

}  // namespace

void SplitEvalConfig::validate(std::size_t n_total) const {
  if (trials < 1) {
    throw std::invalid_argument("SplitEvalConfig: trials must be >= 1");
  }
  if (n_cal < 1) {
    throw std::invalid_argument("SplitEvalConfig: n_cal must be >= 1");
  }
  if (n_cal >= n_total) {
    throw std::invalid_argument(
        "SplitEvalConfig: n_cal (" + std::to_string(n_cal) +
        ") must leave at least one test row out of " + std::to_string(n_total));
  }
  if (!std::isfinite(alpha)) {
    throw std::invalid_argument("SplitEvalConfig: alpha must be finite");
  }
}

SplitTrialRecord split_eval_trial(const ParsedTable& data,
                                  const SplitEvalConfig& config,
                                  std::size_t trial) {
  const LossTable& table = data.table;
  const std::size_t n_total = table.size();
  config.validate(n_total);
  const RiskSpec spec{config.alpha, table.bound};

  const StreamKey trial_key = master_key(config.seed).child(trial);
  const std::vector<std::size_t> perm = trial_permutation(n_total, trial_key);

  std::vector<StepLoss> calibration_rows;
  calibration_rows.reserve(config.n_cal);
  for (std::size_t i = 0; i < config.n_cal; ++i) {
    calibration_rows.push_back(table.rows[perm[i]]);
  }
  const LossTable calibration =
      LossTable::assemble(std::move(calibration_rows), table.bound);

  CalibrationResult result;
  switch (config.calibrator) {
    case Calibrator::naive:
      result = calibrate(calibration, spec);
      break;
    case Calibrator::monotonized:
      result = calibrate_monotonized(calibration, spec, /*correction=*/false);
      break;
    case Calibrator::monotonized_corrected:
      result = calibrate_monotonized(calibration, spec, /*correction=*/true);
      break;
  }
  const double at = std::max(result.lambda_hat, table.domain_min);

  SplitTrialRecord record;
  record.trial = trial;
  record.lambda_hat = result.lambda_hat;
  record.sentinel = result.sentinel();

  long double risk_sum = 0.0L;
  long double size_sum = 0.0L;
  const std::size_t n_test = n_total - config.n_cal;
  for (std::size_t i = config.n_cal; i < n_total; ++i) {
    const std::size_t row = perm[i];
    risk_sum += table.rows[row].eval(at);
    if (!data.sizes.empty()) {
      const StepLoss& size_curve = data.sizes[row];
      size_sum += size_curve.eval(std::max(at, size_curve.domain_min));
    }
  }
  record.test_risk =
      static_cast<double>(risk_sum / static_cast<long double>(n_test));
  if (!data.sizes.empty()) {
    record.mean_set_size =
        static_cast<double>(size_sum / static_cast<long double>(n_test));
  }
  return record;
}

SplitEvalReport split_evaluate(const ParsedTable& data,
                               const SplitEvalConfig& config) {
  const std::size_t n_total = data.table.size();
  config.validate(n_total);
  if (!data.sizes.empty() && data.sizes.size() != n_total) {
    throw std::invalid_argument(
        "split_evaluate: size curves must be empty or one per row");
  }
  RiskSpec{config.alpha, data.table.bound}.validate();

  std::vector<SplitTrialRecord> records(config.trials);
  std::mutex error_mutex;
  std::size_t error_trial = static_cast<std::size_t>(-1);
  std::exception_ptr error;

  const auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      try {
        records[t] = split_eval_trial(data, config, t);
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

  const unsigned workers = std::max(
      1u, std::min<unsigned>(config.threads,
                             static_cast<unsigned>(std::min<std::size_t>(
                                 config.trials, 1024))));
  if (workers == 1) {
    run_range(0, config.trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (config.trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * chunk;
      if (lo >= config.trials) break;
      pool.emplace_back(run_range, lo, std::min(config.trials, lo + chunk));
    }
    for (std::thread& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  SplitEvalReport report;
  report.n_total = n_total;
  report.n_cal = config.n_cal;
  report.n_test = n_total - config.n_cal;
  report.alpha = config.alpha;
  report.bound = data.table.bound;
  report.trials = config.trials;
  report.seed = config.seed;
  report.threads = config.threads;
  report.calibrator = config.calibrator;
  report.band_upper = config.alpha;
  report.band_lower =
      config.alpha -
      2.0 * data.table.bound / static_cast<double>(config.n_cal + 1);

  std::vector<double> risks;
  risks.reserve(records.size());
  long double lambda_sum = 0.0L;
  LambdaSummary& ls = report.lambda_hat;
  long double size_sum = 0.0L;
  std::size_t size_trials = 0;
  for (const SplitTrialRecord& r : records) {
    risks.push_back(r.test_risk);
    if (r.sentinel) {
      ++ls.sentinel_trials;
    } else {
      if (ls.finite_trials == 0) {
        ls.min = ls.max = r.lambda_hat;
      } else {
        ls.min = std::min(ls.min, r.lambda_hat);
        ls.max = std::max(ls.max, r.lambda_hat);
      }
      ++ls.finite_trials;
      lambda_sum += r.lambda_hat;
    }
    if (r.mean_set_size) {
      size_sum += *r.mean_set_size;
      ++size_trials;
    }
  }
  if (ls.finite_trials > 0) {
    ls.mean = static_cast<double>(lambda_sum /
                                  static_cast<long double>(ls.finite_trials));
  }
  if (size_trials > 0) {
    report.mean_set_size = static_cast<double>(
        size_sum / static_cast<long double>(size_trials));
  }
  report.risk = summarize_trials(risks, config.seed);
  report.records = std::move(records);
  return report;
}

std::string split_report_json_text(const SplitEvalReport& report) {
  ordered_json doc;
  doc["alpha"] = checked_json_number(report.alpha);
  doc["B"] = report.bound;
  doc["n_total"] = report.n_total;
  doc["n_cal"] = report.n_cal;
  doc["n_test"] = report.n_test;
  doc["trials"] = report.trials;
  doc["seed"] = report.seed;
  // Thread count is an execution detail, deliberately absent: reports are
  // byte-identical for a given seed no matter how the trials were scheduled.
  doc["calibrator"] = calibrator_name(report.calibrator);
  doc["risk"] = {
      {"mean", report.risk.mean_risk},
      {"std_dev", report.risk.std_dev},
      {"std_error", report.risk.std_error},
  };
  ordered_json lam;
  if (report.lambda_hat.finite_trials > 0) {
    lam["min"] = report.lambda_hat.min;
    lam["max"] = report.lambda_hat.max;
    lam["mean"] = report.lambda_hat.mean;
  } else {
    lam["min"] = nullptr;
    lam["max"] = nullptr;
    lam["mean"] = nullptr;
  }
  lam["finite_trials"] = report.lambda_hat.finite_trials;
  lam["sentinel_trials"] = report.lambda_hat.sentinel_trials;
  doc["lambda_hat"] = lam;
  doc["analytic_band"] = {
      {"lower", report.band_lower},
      {"upper", report.band_upper},
  };
  if (report.mean_set_size) doc["mean_set_size"] = *report.mean_set_size;
  return doc.dump(2) + '\n';
}

void write_split_report(const SplitEvalReport& report,
                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report.json");
    out << split_report_json_text(report);
  }

  {
    std::ofstream out(fs::path(out_dir) / "risk_hist.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write risk_hist.csv");
    out << "bin_lo,bin_hi,count\n";
    const Histogram& h = report.risk.histogram;
    const std::size_t bins = h.counts.size();
    for (std::size_t i = 0; i < bins; ++i) {
      const double width = bins > 0 ? (h.hi - h.lo) / static_cast<double>(bins)
                                    : 0.0;
      const double lo = h.lo + static_cast<double>(i) * width;
      const double hi = i + 1 == bins ? h.hi : lo + width;
      out << detail::format_double(lo) << ',' << detail::format_double(hi)
          << ',' << h.counts[i] << '\n';
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "trials.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trials.csv");
    const bool with_sizes = report.mean_set_size.has_value();
    out << "trial,lambda_hat,test_risk";
    if (with_sizes) out << ",mean_set_size";
    out << '\n';
    for (const SplitTrialRecord& r : report.records) {
      out << r.trial << ',' << detail::format_double(r.lambda_hat) << ','
          << detail::format_double(r.test_risk);
      if (with_sizes) {
        out << ',' << detail::format_double(r.mean_set_size.value_or(0.0));
      }
      out << '\n';
    }
  }
}

}  // namespace riskcal
