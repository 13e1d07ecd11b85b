#include "riskcal/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace riskcal {

namespace detail {

SegmentSums segment_sums(const LossTable& table) {
  struct Event {
    double bp;
    long double delta;
  };
  std::vector<Event> events;
  std::size_t total = 0;
  for (const StepLoss& row : table.rows) total += row.breakpoints.size();
  events.reserve(total);

  long double below = 0.0L;
  for (const StepLoss& row : table.rows) {
    below += row.values[0];
    for (std::size_t j = 0; j < row.breakpoints.size(); ++j) {
      events.push_back({row.breakpoints[j],
                        static_cast<long double>(row.values[j + 1]) -
                            static_cast<long double>(row.values[j])});
    }
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.bp < b.bp; });

  SegmentSums out;
  out.breakpoints.reserve(events.size());
  out.sums.reserve(events.size() + 1);
  out.sums.push_back(below);
  long double running = below;
  std::size_t i = 0;
  while (i < events.size()) {
    const double bp = events[i].bp;
    while (i < events.size() && events[i].bp == bp) {
      running += events[i].delta;
      ++i;
    }
    out.breakpoints.push_back(bp);
    out.sums.push_back(running);
  }
  return out;
}

long double feasibility_budget(double alpha, std::size_t n) noexcept {
  return static_cast<long double>(n + 1) * static_cast<long double>(alpha);
}

std::int64_t max_feasible_count(double alpha, std::size_t n) noexcept {
  // c + 1 <= budget  <=>  c <= budget - 1; the largest such integer is
  // floor(budget) - 1 whether or not budget is itself an integer.
  return static_cast<std::int64_t>(std::floor(feasibility_budget(alpha, n))) -
         1;
}

std::int64_t max_feasible_count_uncorrected(double alpha,
                                            std::size_t n) noexcept {
  const long double limit =
      static_cast<long double>(n) * static_cast<long double>(alpha);
  const long double f = std::floor(limit);
  if (f < 0.0L) return -1;
  return static_cast<std::int64_t>(f);
}

namespace {

enum class Search { scan, bisect };

// First index in [0, count) where pred is true; count if none. pred must be
// monotone (false* true*) for bisect.
template <typename Pred>
std::size_t first_true(std::size_t count, Search mode, Pred pred) {
  if (mode == Search::scan) {
    for (std::size_t j = 0; j < count; ++j) {
      if (pred(j)) return j;
    }
    return count;
  }
  std::size_t lo = 0, hi = count;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::size_t first_increasing_row(const LossTable& table) {
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!table.rows[i].non_increasing()) return i;
  }
  return table.rows.size();
}

void check_spec(const LossTable& table, const RiskSpec& spec) {
  spec.validate();
  if (table.bound > spec.bound) {
    throw std::invalid_argument(
        "calibrate: table bound exceeds spec bound B; the inflation term "
        "would understate the worst-case loss");
  }
}

CalibrationResult make_result(const SegmentSums& seg, std::size_t j,
                              std::size_t n, double bound,
                              const long double* suffix_max, bool corrected) {
  const long double s = suffix_max ? suffix_max[j] : seg.sums[j];
  CalibrationResult r;
  if (j == 0) {
    r.lambda_hat = kNegInf;
    r.attained_breakpoint = std::nullopt;
  } else {
    r.lambda_hat = seg.breakpoints[j - 1];
    r.attained_breakpoint = j - 1;
  }
  r.empirical_risk = static_cast<double>(s / static_cast<long double>(n));
  if (corrected) {
    r.inflated_risk = static_cast<double>(
        (s + static_cast<long double>(bound)) / static_cast<long double>(n + 1));
  } else {
    r.inflated_risk = r.empirical_risk;
  }
  return r;
}

CalibrationResult calibrate_core(const LossTable& table, const RiskSpec& spec,
                                 Search mode, bool check_monotone) {
  check_spec(table, spec);
  if (check_monotone && !table.monotone) {
    throw NonMonotoneError(first_increasing_row(table));
  }
  const std::size_t n = table.rows.size();
  const SegmentSums seg = segment_sums(table);
  const long double budget = feasibility_budget(spec.alpha, n);
  const long double b = static_cast<long double>(spec.bound);
  const auto feasible = [&](std::size_t j) { return seg.sums[j] + b <= budget; };

  const std::size_t count = seg.sums.size();
  const std::size_t j = first_true(count, mode, feasible);
  if (j == count) {
    long double min_stat = seg.sums[0];
    for (const long double s : seg.sums) min_stat = std::min(min_stat, s);
    const double min_inflated = static_cast<double>(
        (min_stat + b) / static_cast<long double>(n + 1));
    throw InfeasibleError(
        "calibrate: inflated risk exceeds alpha at every threshold "
        "(minimum achievable " +
            std::to_string(min_inflated) + ")",
        min_inflated);
  }
  return make_result(seg, j, n, spec.bound, nullptr, /*corrected=*/true);
}

}  // namespace

CalibrationResult calibrate_scan(const LossTable& table,
                                 const RiskSpec& spec) {
  if (!table.monotone) throw NonMonotoneError(first_increasing_row(table));
  return calibrate_core(table, spec, Search::scan, /*check_monotone=*/true);
}

std::uint64_t breakpoint_collisions(const LossTable& table) {
  std::uint64_t total = 0;
  for (const StepLoss& row : table.rows) total += row.breakpoints.size();
  return total - merged_breakpoints(table).size();
}

}  // namespace detail

CalibrationResult calibrate(const LossTable& table, const RiskSpec& spec) {
  return detail::calibrate_core(table, spec, detail::Search::bisect,
                                /*check_monotone=*/true);
}

CalibrationResult calibrate_unchecked(const LossTable& table,
                                      const RiskSpec& spec) {
  return detail::calibrate_core(table, spec, detail::Search::scan,
                                /*check_monotone=*/false);
}

CalibrationResult calibrate_monotonized(const LossTable& table,
                                        const RiskSpec& spec,
                                        bool correction) {
  detail::check_spec(table, spec);
  const std::size_t n = table.rows.size();
  const detail::SegmentSums seg = detail::segment_sums(table);

  std::vector<long double> suffix(seg.sums.size());
  long double running = seg.sums.back();
  for (std::size_t j = seg.sums.size(); j-- > 0;) {
    running = std::max(running, seg.sums[j]);
    suffix[j] = running;
  }

  const long double b = static_cast<long double>(spec.bound);
  const long double limit =
      correction ? detail::feasibility_budget(spec.alpha, n)
                 : static_cast<long double>(n) * static_cast<long double>(spec.alpha);
  const auto feasible = [&](std::size_t j) {
    return (correction ? suffix[j] + b : suffix[j]) <= limit;
  };

  // The suffix maximum is non-increasing, so binary search applies even when
  // the raw table is not monotone.
  const std::size_t count = suffix.size();
  const std::size_t j =
      detail::first_true(count, detail::Search::bisect, feasible);
  if (j == count) {
    const long double min_stat = suffix.back();
    const double min_inflated =
        correction ? static_cast<double>((min_stat + b) /
                                         static_cast<long double>(n + 1))
                   : static_cast<double>(min_stat / static_cast<long double>(n));
    throw InfeasibleError(
        "calibrate_monotonized: monotonized risk exceeds alpha at every "
        "threshold (minimum achievable " +
            std::to_string(min_inflated) + ")",
        min_inflated);
  }
  return detail::make_result(seg, j, n, spec.bound, suffix.data(), correction);
}

LossTable monotonize_losses(const LossTable& table) {
  std::vector<StepLoss> rows;
  rows.reserve(table.rows.size());
  for (const StepLoss& row : table.rows) rows.push_back(row.monotonized());
  return LossTable::assemble(std::move(rows), table.bound);
}

double jump_bound_diagnostic(const LossTable& table) {
  const detail::SegmentSums seg = detail::segment_sums(table);
  const long double n = static_cast<long double>(table.rows.size());
  long double max_jump = 0.0L;
  for (std::size_t j = 1; j < seg.sums.size(); ++j) {
    max_jump = std::max(max_jump, (seg.sums[j - 1] - seg.sums[j]) / n);
  }
  return static_cast<double>(max_jump);
}

QuantileResult conformal_quantile(std::vector<double> scores, double alpha) {
  if (scores.empty()) {
    throw std::invalid_argument("conformal_quantile: scores must be nonempty");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw std::invalid_argument("conformal_quantile: scores must be finite");
    }
  }
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("conformal_quantile: alpha must be in (0,1)");
  }
  const std::size_t n = scores.size();
  // k = ceil((n+1)(1-alpha)) = (n+1) - floor((n+1) alpha): the identity holds
  // for every real (n+1)alpha, and the floor is taken on the same long-double
  // product calibrate budgets with, so the two procedures cannot disagree.
  const std::int64_t m =
      static_cast<std::int64_t>(std::floor(detail::feasibility_budget(alpha, n)));
  const std::int64_t k = static_cast<std::int64_t>(n) + 1 - m;

  QuantileResult out;
  out.order_index = static_cast<std::uint64_t>(k);
  if (k > static_cast<std::int64_t>(n)) {
    out.threshold = kPosInf;
    out.finite = false;
    return out;
  }
  auto kth = scores.begin() + (k - 1);
  std::nth_element(scores.begin(), kth, scores.end());
  out.threshold = *kth;
  out.finite = true;
  return out;
}

}  // namespace riskcal
