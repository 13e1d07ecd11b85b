#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "riskcal/calibrate.hpp"
#include "riskcal/rng.hpp"
#include "riskcal/simulate.hpp"
#include "riskcal/step_loss.hpp"

using namespace riskcal;

// ---------------------------------------------------------------------------
// Scenario generators

TEST_CASE("scenario generators are deterministic in the trial key") {
  TightnessParams params;
  params.k = 2;
  params.eps_prime = 0.25;
  params.n = 12;
  const TableGen gen = gen_tightness(params);
  const StreamKey key = master_key(7).child(3);
  const LossTable a = gen(key);
  const LossTable b = gen(key);
  CHECK(a.rows == b.rows);
  const LossTable c = gen(master_key(7).child(4));
  CHECK(a.rows != c.rows);
}

TEST_CASE("uniform miscoverage rows are unit indicators") {
  const LossTable t = gen_miscoverage_uniform(25)(master_key(1).child(0));
  REQUIRE(t.rows.size() == 26);
  CHECK(t.bound == 1.0);
  CHECK(t.monotone);
  for (const StepLoss& row : t.rows) {
    REQUIRE(row.breakpoints.size() == 1);
    CHECK(row.values == std::vector<double>{1.0, 0.0});
    CHECK(row.breakpoints[0] >= 0.0);
    CHECK(row.breakpoints[0] < 1.0);
  }
  CHECK_THROWS_AS(gen_miscoverage_uniform(0), std::invalid_argument);
}

TEST_CASE("tightness rows step through the plateau k/(k+1)") {
  TightnessParams params;
  params.k = 3;
  params.eps_prime = 0.25;
  params.n = 50;
  CHECK(params.alpha() == (4.0 - 0.25) / 51.0);

  const LossTable t = gen_tightness(params)(master_key(2).child(0));
  REQUIRE(t.rows.size() == 51);
  CHECK(t.monotone);
  for (const StepLoss& row : t.rows) {
    REQUIRE(row.breakpoints.size() == 2);
    CHECK(row.values == std::vector<double>{1.0, 3.0 / 4.0, 0.0});
    CHECK(row.breakpoints[0] < 0.5);
    CHECK(row.breakpoints[1] >= 0.5);
  }

  CHECK_THROWS_AS(gen_tightness({0, 0.5, 10}), std::invalid_argument);
  CHECK_THROWS_AS(gen_tightness({1, 1.0, 10}), std::invalid_argument);
  CHECK_THROWS_AS(gen_tightness({1, 0.0, 10}), std::invalid_argument);
  CHECK_THROWS_AS(gen_tightness({5, 0.5, 6}), std::invalid_argument);
}

TEST_CASE("near-monotone rows are an indicator with a bump") {
  NearMonotoneParams params;
  params.n = 60;
  const LossTable t = gen_near_monotone(params)(master_key(3).child(1));
  REQUIRE(t.rows.size() == 61);
  CHECK(t.bound == 1.0);
  CHECK_FALSE(t.monotone);
  bool saw_bump = false;
  for (const StepLoss& row : t.rows) {
    if (!row.non_increasing()) saw_bump = true;
    CHECK(row.values.front() == 1.0);
    CHECK(row.values.back() == 0.0);
  }
  CHECK(saw_bump);
}

TEST_CASE("grid scenario rows live on the integer grid") {
  CounterexampleParams params;
  params.p = 0.6;
  params.N = 8;
  params.n_cal = 5;
  params.alpha = 0.4;
  const LossTable t = gen_counterexample(params)(master_key(4).child(2));
  REQUIRE(t.rows.size() == 6);
  CHECK(t.bound == 1.0);
  CHECK(t.domain_min == 0.0);
  for (const StepLoss& row : t.rows) {
    CHECK(row.domain_min == 0.0);
    CHECK(row.values.back() == 0.0);
    for (double bp : row.breakpoints) {
      const double scaled = bp * 8.0;
      CHECK(scaled == std::floor(scaled));  // a subset of {j/8}
      CHECK(bp > 0.0);
      CHECK(bp <= 1.0);
    }
    for (double v : row.values) CHECK((v == 0.0 || v == 1.0));
  }
}

// ---------------------------------------------------------------------------
// Trial mechanics

TEST_CASE("a table that is zero everywhere selects the sentinel and scores 0") {
  std::vector<StepLoss> rows(4, StepLoss::constant(0.0));
  const LossTable t = LossTable::assemble(std::move(rows), 1.0);
  CHECK(run_table_trial(t, RiskSpec{0.5, 1.0}, Calibrator::naive) == 0.0);
}

TEST_CASE("an unattainable level reports the first failing trial") {
  try {
    monte_carlo_risk(gen_miscoverage_uniform(3), RiskSpec{0.2, 1.0}, 5,
                     Calibrator::naive, 42);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    REQUIRE(e.trial().has_value());
    CHECK(*e.trial() == 0);
    CHECK(e.min_inflated_risk() == 0.25);  // (0 * 3 + 1) / 4 at the top
  }
}

TEST_CASE("summaries: spread bookkeeping and histograms") {
  const TrialSummary two = summarize_trials({0.0, 1.0}, 9);
  CHECK(two.trials == 2);
  CHECK(two.seed == 9);
  CHECK(two.mean_risk == 0.5);
  CHECK(two.std_dev == doctest::Approx(std::sqrt(0.5)));
  CHECK(two.std_error == doctest::Approx(0.5));

  const TrialSummary one = monte_carlo_risk(
      gen_miscoverage_uniform(9), RiskSpec{0.5, 1.0}, 1, Calibrator::naive, 11);
  CHECK(one.trials == 1);
  CHECK(one.std_dev == 0.0);
  CHECK(one.std_error == 0.0);

  const TrialSummary many = monte_carlo_risk(gen_miscoverage_uniform(9),
                                             RiskSpec{0.5, 1.0}, 250,
                                             Calibrator::naive, 11);
  std::uint64_t total = 0;
  for (std::uint64_t c : many.histogram.counts) total += c;
  CHECK(total == many.trials);
  CHECK(many.histogram.lo <= many.histogram.hi);
}

TEST_CASE("thread count changes neither means nor histograms") {
  const TableGen gen = gen_miscoverage_uniform(40);
  const RiskSpec spec{0.2, 1.0};
  const TrialSummary a = monte_carlo_risk(gen, spec, 200, Calibrator::naive, 5, 1);
  const TrialSummary b = monte_carlo_risk(gen, spec, 200, Calibrator::naive, 5, 3);
  CHECK(a.mean_risk == b.mean_risk);
  CHECK(a.std_dev == b.std_dev);
  CHECK(a.histogram.counts == b.histogram.counts);

  CounterexampleParams cp;
  cp.p = 0.5;
  cp.N = 32;
  cp.n_cal = 8;
  cp.alpha = 0.35;
  const TrialSummary c = counterexample_monte_carlo(cp, 300, Calibrator::naive, 6, 1);
  const TrialSummary d = counterexample_monte_carlo(cp, 300, Calibrator::naive, 6, 4);
  CHECK(c.mean_risk == d.mean_risk);
  CHECK(c.std_dev == d.std_dev);
  CHECK(c.histogram.counts == d.histogram.counts);
}

TEST_CASE("near-monotone risk stays near the level under monotonization") {
  NearMonotoneParams params;  // 100 calibration rows
  const TrialSummary s = monte_carlo_risk(gen_near_monotone(params),
                                          RiskSpec{0.3, 1.0}, 400,
                                          Calibrator::monotonized, 13);
  // Uncorrected selection on dominating losses: level plus at most B/(n+1).
  CHECK(s.mean_risk <= 0.3 + 1.0 / 101.0 + 4.0 * s.std_error);
  CHECK(s.mean_risk > 0.1);
}

// ---------------------------------------------------------------------------
// Grid scenario: lazy tiers against the materialized calibrators

TEST_CASE("replay tier reproduces materialized trials bit for bit") {
  CounterexampleParams params;
  params.p = 0.55;
  params.N = 40;
  params.n_cal = 6;
  params.alpha = 0.4;
  const TableGen gen = gen_counterexample(params);
  const RiskSpec spec{params.alpha, 1.0};
  const StreamKey root = master_key(991);
  for (Calibrator cal : {Calibrator::naive, Calibrator::monotonized,
                         Calibrator::monotonized_corrected}) {
    const detail::CxLaw law = detail::counterexample_law(params, cal);
    for (std::uint64_t t = 0; t < 300; ++t) {
      const StreamKey key = root.child(t);
      const double lazy = detail::cx_trial_replay(params, law, cal, key);
      const double full = run_table_trial(gen(key), spec, cal);
      REQUIRE(lazy == full);
    }
  }
}

TEST_CASE("all tiers agree with the exact expected risk") {
  CounterexampleParams params;
  params.p = 0.5;
  params.N = 64;
  params.n_cal = 10;
  params.alpha = 0.3;
  const double frozen = 0.4863291459397672;
  CHECK(closed_form_counterexample_risk(params) ==
        doctest::Approx(frozen).epsilon(1e-12));

  const TrialSummary mat = counterexample_monte_carlo(
      params, 4000, Calibrator::naive, 20260101, 1, CxTier::materialized);
  const TrialSummary rep = counterexample_monte_carlo(
      params, 4000, Calibrator::naive, 20260101, 1, CxTier::replay);
  const TrialSummary geo = counterexample_monte_carlo(
      params, 4000, Calibrator::naive, 20260101, 1, CxTier::geometric);
  const TrialSummary aut = counterexample_monte_carlo(
      params, 4000, Calibrator::naive, 20260101, 1, CxTier::automatic);

  // replay is draw-for-draw the materialized run; automatic picks it here.
  CHECK(rep.mean_risk == mat.mean_risk);
  CHECK(rep.std_dev == mat.std_dev);
  CHECK(aut.mean_risk == mat.mean_risk);

  CHECK(std::abs(mat.mean_risk - frozen) <= 4.0 * mat.std_error);
  CHECK(std::abs(geo.mean_risk - frozen) <= 4.0 * geo.std_error);
}

TEST_CASE("closed form cross-checked through an independent binomial route") {
  CounterexampleParams params;
  params.p = 0.9;
  params.N = 50;
  params.n_cal = 10;
  params.alpha = 0.3;

  const detail::CxLaw law = detail::counterexample_law(params, Calibrator::naive);
  CHECK(law.max_count == 2);  // floor(11 * 0.3) - 1

  const long double q = testoracle::binom_cdf_terms(10, 0.9, 2);
  const long double alt = 0.9L * (-std::expm1(50.0L * std::log1p(-q)));
  const double lib = closed_form_counterexample_risk(params);
  CHECK(std::abs(lib - static_cast<double>(alt)) <= 1e-12 * lib);
  CHECK(lib == doctest::Approx(1.681184611732145e-05).epsilon(1e-12));
}

TEST_CASE("closed form edges: degenerate p, single column, growth in N") {
  CounterexampleParams params;
  params.n_cal = 10;
  params.alpha = 0.3;
  params.N = 20;

  params.p = 0.0;
  CHECK(closed_form_counterexample_risk(params) == 0.0);
  params.p = 1.0;
  CHECK(closed_form_counterexample_risk(params) == 0.0);

  params.p = 0.4;
  params.N = 1;
  const long double q1 = testoracle::binom_cdf_terms(10, 0.4, 2);
  CHECK(closed_form_counterexample_risk(params) ==
        doctest::Approx(0.4 * static_cast<double>(q1)).epsilon(1e-12));

  params.p = 0.5;
  double prev = 0.0;
  for (std::uint64_t n_cols : {1ull, 2ull, 4ull, 16ull, 256ull, 65536ull}) {
    params.N = n_cols;
    const double r = closed_form_counterexample_risk(params);
    CHECK(r >= prev);
    prev = r;
  }
  CHECK(prev == doctest::Approx(0.5));  // every trial finds a feasible column
}

TEST_CASE("smallest sufficient grid size sits exactly at its boundary") {
  CHECK(counterexample_sufficient_N(10, 0.5, 0.3) == 13);
  const long double q = 56.0L / 1024.0L;  // BinomialCDF(10, 1/2, 2) exactly
  CHECK(std::pow(1.0L - q, 13.0L) <= 0.5L);
  CHECK(std::pow(1.0L - q, 12.0L) > 0.5L);

  CHECK(counterexample_sufficient_N(10, 0.95, 0.3) == 1866409009ull);

  CHECK_THROWS_AS(counterexample_sufficient_N(10, 0.0, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(counterexample_sufficient_N(10, 1.0, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(counterexample_sufficient_N(10, 0.5, 0.05),
                  std::invalid_argument);
  CHECK_THROWS_AS(counterexample_sufficient_N(200, 0.9999, 0.3),
                  std::overflow_error);
}

// ---------------------------------------------------------------------------
// Jump lemma harness

TEST_CASE("continuous tables have small jumps and no collisions") {
  TightnessParams params;
  params.k = 1;
  params.eps_prime = 0.5;
  params.n = 10;
  const JumpLemmaReport rep = verify_jump_lemma(gen_tightness(params), 100, 777);
  CHECK(rep.trials == 100);
  CHECK(rep.collisions == 0);
  CHECK(rep.max_jump > 0.0);
  CHECK(rep.max_jump <= 1.0 / 11.0 + 1e-12);
}
