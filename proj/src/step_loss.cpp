#include "riskcal/step_loss.hpp"

#include <algorithm>
#include <cmath>

namespace riskcal {

void StepLoss::validate() const {
  if (values.size() != breakpoints.size() + 1) {
    throw std::invalid_argument(
        "StepLoss: values.size() must be breakpoints.size() + 1 (got " +
        std::to_string(values.size()) + " values for " +
        std::to_string(breakpoints.size()) + " breakpoints)");
  }
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    if (!std::isfinite(breakpoints[j])) {
      throw std::invalid_argument("StepLoss: breakpoint " + std::to_string(j) +
                                  " is not finite");
    }
    if (j > 0 && !(breakpoints[j - 1] < breakpoints[j])) {
      throw std::invalid_argument(
          "StepLoss: breakpoints must be strictly increasing (violated at index " +
          std::to_string(j) + ")");
    }
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw std::invalid_argument("StepLoss: value " + std::to_string(j) +
                                  " is not finite");
    }
  }
  if (std::isnan(domain_min)) {
    throw std::invalid_argument("StepLoss: domain_min is NaN");
  }
  if (!breakpoints.empty() && std::isfinite(domain_min) &&
      !(breakpoints.front() > domain_min)) {
    throw std::invalid_argument(
        "StepLoss: first breakpoint must lie above domain_min");
  }
}

double StepLoss::eval(double lambda) const {
  if (std::isnan(lambda) || lambda < domain_min) {
    throw std::domain_error("StepLoss::eval: lambda below domain_min");
  }
  // Right-continuity: at a breakpoint, the segment starting there applies.
  const auto it =
      std::upper_bound(breakpoints.begin(), breakpoints.end(), lambda);
  return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

bool StepLoss::non_increasing() const noexcept {
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[j - 1]) return false;
  }
  return true;
}

double StepLoss::max_value() const noexcept {
  double m = values.front();
  for (double v : values) m = std::max(m, v);
  return m;
}

double StepLoss::min_value() const noexcept {
  double m = values.front();
  for (double v : values) m = std::min(m, v);
  return m;
}

StepLoss StepLoss::canonical() const {
  StepLoss out;
  out.domain_min = domain_min;
  out.values.push_back(values.front());
  for (std::size_t j = 0; j < breakpoints.size(); ++j) {
    if (values[j + 1] != out.values.back()) {
      out.breakpoints.push_back(breakpoints[j]);
      out.values.push_back(values[j + 1]);
    }
  }
  return out;
}

StepLoss StepLoss::monotonized() const {
  StepLoss out = *this;
  for (std::size_t j = out.values.size() - 1; j-- > 0;) {
    out.values[j] = std::max(out.values[j], out.values[j + 1]);
  }
  return out.canonical();
}

StepLoss StepLoss::constant(double value, double domain_min) {
  StepLoss out;
  out.values.push_back(value);
  out.domain_min = domain_min;
  return out;
}

StepLoss step_max(const StepLoss& a, const StepLoss& b) {
  a.validate();
  b.validate();
  StepLoss out;
  out.domain_min = std::max(a.domain_min, b.domain_min);
  std::vector<double> bps;
  bps.reserve(a.breakpoints.size() + b.breakpoints.size());
  bps.insert(bps.end(), a.breakpoints.begin(), a.breakpoints.end());
  bps.insert(bps.end(), b.breakpoints.begin(), b.breakpoints.end());
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  out.values.push_back(std::max(a.values.front(), b.values.front()));
  for (double bp : bps) {
    out.breakpoints.push_back(bp);
    out.values.push_back(std::max(a.eval(bp), b.eval(bp)));
  }
  return out.canonical();
}

void RiskSpec::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(bound)) {
    throw std::invalid_argument("RiskSpec: alpha and bound must be finite");
  }
  if (!(alpha < bound)) {
    throw std::invalid_argument("RiskSpec: alpha must be < bound");
  }
}

LossTable LossTable::assemble(std::vector<StepLoss> rows, double bound) {
  if (rows.empty()) {
    throw std::invalid_argument("LossTable: at least one row required");
  }
  if (!std::isfinite(bound)) {
    throw std::invalid_argument("LossTable: bound must be finite");
  }
  LossTable table;
  table.bound = bound;
  table.domain_min = kNegInf;
  table.min_value = kPosInf;
  table.monotone = true;
  table.rows.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      rows[i].validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("LossTable row " + std::to_string(i) + ": " +
                                  e.what());
    }
    if (rows[i].max_value() > bound) {
      throw std::invalid_argument("LossTable row " + std::to_string(i) +
                                  ": value exceeds bound B");
    }
    StepLoss canon = rows[i].canonical();
    table.domain_min = std::max(table.domain_min, canon.domain_min);
    table.min_value = std::min(table.min_value, canon.min_value());
    if (!canon.non_increasing()) table.monotone = false;
    table.rows.push_back(std::move(canon));
  }
  return table;
}

LossTable LossTable::head(std::size_t k) const {
  if (k == 0 || k > rows.size()) {
    throw std::invalid_argument("LossTable::head: k must be in [1, size()]");
  }
  return assemble(std::vector<StepLoss>(rows.begin(),
                                        rows.begin() + static_cast<std::ptrdiff_t>(k)),
                  bound);
}

std::vector<double> merged_breakpoints(const LossTable& table) {
  std::vector<double> bps;
  for (const StepLoss& row : table.rows) {
    bps.insert(bps.end(), row.breakpoints.begin(), row.breakpoints.end());
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  return bps;
}

double empirical_risk(const LossTable& table, double lambda) {
  long double sum = 0.0L;
  for (const StepLoss& row : table.rows) sum += row.eval(lambda);
  return static_cast<double>(sum / static_cast<long double>(table.rows.size()));
}

}  // namespace riskcal
