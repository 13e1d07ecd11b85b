#pragma once

// Reference implementations used to pin expected values in tests. Each is a
// deliberately plain, literal evaluation of a definition — no sharing of the
// production code paths whose outputs they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "riskcal/step_loss.hpp"

namespace testoracle {

// Binomial CDF by explicit term recursion in long double:
// t_0 = (1-p)^n, t_{k+1} = t_k * ((n-k)/(k+1)) * (p/(1-p)).
inline long double binom_cdf_terms(std::uint64_t n, double p, std::int64_t m) {
  if (m < 0) return 0.0L;
  if (m >= static_cast<std::int64_t>(n)) return 1.0L;
  if (p <= 0.0) return 1.0L;
  if (p >= 1.0) return 0.0L;
  const long double lp = p;
  const long double lq = 1.0L - lp;
  long double term = std::pow(lq, static_cast<long double>(n));
  long double sum = term;
  for (std::int64_t k = 0; k < m; ++k) {
    term *= (static_cast<long double>(n - k) /
             static_cast<long double>(k + 1)) *
            (lp / lq);
    sum += term;
  }
  return sum;
}

// Literal threshold search: walk the sentinel and every row breakpoint in
// ascending order, sum row.eval(lambda) directly in long double, and return
// the first lambda whose inflated sum meets the budget. nullopt = infeasible.
inline std::optional<double> literal_calibrate(const riskcal::LossTable& table,
                                               const riskcal::RiskSpec& spec) {
  std::vector<double> candidates;
  for (const riskcal::StepLoss& row : table.rows) {
    candidates.insert(candidates.end(), row.breakpoints.begin(),
                      row.breakpoints.end());
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const long double budget =
      static_cast<long double>(table.size() + 1) *
      static_cast<long double>(spec.alpha);
  const auto feasible = [&](double lambda) {
    long double sum = 0.0L;
    for (const riskcal::StepLoss& row : table.rows) {
      sum += static_cast<long double>(
          row.eval(std::max(lambda, table.domain_min)));
    }
    return sum + static_cast<long double>(table.bound) <= budget;
  };

  if (feasible(riskcal::kNegInf)) return riskcal::kNegInf;
  for (double bp : candidates) {
    if (feasible(bp)) return bp;
  }
  return std::nullopt;
}

}  // namespace testoracle
