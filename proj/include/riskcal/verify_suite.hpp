#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// The acceptance checklist: ten end-to-end checks of the library's
// statistical guarantees and exact-equivalence contracts, with tolerances and
// configurations pinned here rather than tuned to the implementation.
// Statistical checks use 4-standard-error bands around their analytic
// references; exact checks compare doubles bit-for-bit.
//
// The master seed is fixed so results are reproducible; it was chosen before
// the checks were first run and is not tuned to make them pass. One check
// (criterion 4) asserts a distribution-level margin stronger than the
// attainable one and is expected to fail; its detail line reports the
// measured, required, and attainable gaps. See README for discussion.

namespace riskcal {

inline constexpr std::uint64_t kAcceptanceSeed = 20260816;
inline constexpr int kCriteriaCount = 10;

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs one criterion (1-based id in [1, kCriteriaCount]).
CriterionResult run_criterion(int id, std::uint64_t seed = kAcceptanceSeed);

// Runs all criteria in order.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = kAcceptanceSeed);

// One line per criterion: "criterion <id> <PASS|FAIL> <name>: <detail>".
void print_criteria(const std::vector<CriterionResult>& results,
                    std::ostream& out);

int count_failures(const std::vector<CriterionResult>& results) noexcept;

}  // namespace riskcal
