#include "riskcal/verify_suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "riskcal/binomial.hpp"
#include "riskcal/calibrate.hpp"
#include "riskcal/cli.hpp"
#include "riskcal/losses.hpp"
#include "riskcal/rng.hpp"
#include "riskcal/simulate.hpp"
#include "riskcal/step_loss.hpp"
#include "riskcal/table_io.hpp"

// Each criterion carries its own flat-footed oracle, written here from the
// definitions rather than on top of the library's internals, so a check can
// only pass when two independent routes land on the same answer. Tolerances:
// statistical checks use 4-standard-error bands; exact checks use operator==
// on doubles; the binomial cross-check uses 1e-12 relative error.

namespace riskcal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: the calibrated threshold on indicator losses equals the
// split-conformal score quantile bit-for-bit, sentinels included.

CriterionResult criterion_1(std::uint64_t seed) {
  CriterionResult out{1, "threshold-equals-score-quantile", false, ""};
  const auto t0 = Clock::now();

  Rng rng(master_key(seed).child(9001));
  std::size_t mismatches = 0;
  std::size_t sentinel_pairs = 0;
  const std::size_t kSets = 1000;

  for (std::size_t i = 0; i < kSets; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.bounded(500));
    const double alpha = static_cast<double>(1 + rng.bounded(50)) / 100.0;
    std::vector<double> scores(n);
    for (double& s : scores) {
      s = rng.next_unit();
      // A quarter of the scores land on a coarse grid to force ties.
      if (rng.next_unit() < 0.25) s = std::round(s * 10.0) / 10.0;
    }

    std::vector<StepLoss> rows;
    rows.reserve(n);
    for (double s : scores) rows.push_back(miscoverage_loss(s));
    const LossTable table = LossTable::assemble(std::move(rows), 1.0);
    const QuantileResult q = conformal_quantile(scores, alpha);

    bool matched = false;
    try {
      const CalibrationResult res = calibrate(table, RiskSpec{alpha, 1.0});
      matched = q.finite && res.lambda_hat == q.threshold;
    } catch (const InfeasibleError&) {
      matched = !q.finite;
      if (matched) ++sentinel_pairs;
    }
    if (!matched) ++mismatches;
  }

  const double elapsed = seconds_since(t0);
  out.passed = mismatches == 0 && elapsed < 10.0;
  out.detail = std::to_string(kSets - mismatches) + "/" +
               std::to_string(kSets) + " exact matches (" +
               std::to_string(sentinel_pairs) +
               " infeasible/sentinel pairs agreed), " + fmt(elapsed, 3) +
               "s (limit 10s)";
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 2-4: Monte Carlo risk bands on the row scenarios.

CriterionResult criterion_2(std::uint64_t seed) {
  CriterionResult out{2, "coverage-risk-band", false, ""};
  const auto t0 = Clock::now();
  const std::size_t n = 100;
  const double alpha = 0.1;
  const TrialSummary s =
      monte_carlo_risk(gen_miscoverage_uniform(n), RiskSpec{alpha, 1.0},
                       10000, Calibrator::naive, seed);
  const double elapsed = seconds_since(t0);
  const double upper = alpha + 4.0 * s.std_error;
  const double lower =
      alpha - 1.0 / static_cast<double>(n + 1) - 4.0 * s.std_error;
  out.passed =
      s.mean_risk <= upper && s.mean_risk >= lower && elapsed < 30.0;
  out.detail = "mean=" + fmt(s.mean_risk) + " in [" + fmt(lower) + ", " +
               fmt(upper) + "], se=" + fmt(s.std_error, 3) + ", " +
               fmt(elapsed, 3) + "s (limit 30s)";
  return out;
}

CriterionResult criterion_3(std::uint64_t seed) {
  CriterionResult out{3, "risk-lower-band-tightness", false, ""};
  TightnessParams params;
  params.k = 3;
  params.eps_prime = 0.25;
  params.n = 50;
  const double alpha = params.alpha();
  const TrialSummary s =
      monte_carlo_risk(gen_tightness(params), RiskSpec{alpha, 1.0}, 10000,
                       Calibrator::naive, seed);
  const double lower =
      alpha - 2.0 / static_cast<double>(params.n + 1) - 4.0 * s.std_error;
  const double upper = alpha + 4.0 * s.std_error;
  out.passed = s.mean_risk >= lower && s.mean_risk <= upper;
  out.detail = "mean=" + fmt(s.mean_risk) + " in [" + fmt(lower) + ", " +
               fmt(upper) + "], alpha=" + fmt(alpha) +
               ", se=" + fmt(s.std_error, 3);
  return out;
}

CriterionResult criterion_4(std::uint64_t seed) {
  CriterionResult out{4, "tightness-gap-margin", false, ""};
  TightnessParams params;
  params.k = 3;
  params.eps_prime = 0.25;
  params.n = 100;
  const double alpha = params.alpha();
  const double np1 = static_cast<double>(params.n + 1);
  const TrialSummary s =
      monte_carlo_risk(gen_tightness(params), RiskSpec{alpha, 1.0}, 20000,
                       Calibrator::naive, seed);
  const double gap = alpha - s.mean_risk;
  const double required = 1.5 / np1 - 4.0 * s.std_error;
  // The scenario's exact gap is (1 - eps_prime)/(n+1): the check demands
  // twice that, so a correct implementation is expected to land short.
  const double attainable = (1.0 - params.eps_prime) / np1;
  out.passed = gap >= required;
  out.detail = "measured gap=" + fmt(gap) + ", required >= " + fmt(required) +
               ", exact attainable gap=" + fmt(attainable) +
               ", se=" + fmt(s.std_error, 3);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: adversarial grid at the auto-sized N against the closed form,
// plus the binomial CDF against an exhaustive-summation oracle.

// Term-recursion binomial CDF: t_0 = (1-p)^n, t_{k+1} = t_k * ((n-k)/(k+1)) *
// (p/(1-p)), summed in long double. Independent of the log-space production
// route.
long double binom_cdf_oracle(std::uint64_t n, double p, std::int64_t m) {
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

long double binomial_grid_max_rel_error() {
  const std::uint64_t ns[] = {1, 2, 3, 7, 10, 50, 100, 250, 500, 1000};
  const double ps[] = {0.001, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.999};
  long double max_rel = 0.0L;
  for (std::uint64_t n : ns) {
    std::set<std::int64_t> ms;
    const std::int64_t sn = static_cast<std::int64_t>(n);
    for (std::int64_t m : {std::int64_t{0}, std::int64_t{1}, sn / 4, sn / 2,
                           3 * sn / 4, sn - 1}) {
      if (m >= 0 && m < sn) ms.insert(m);
    }
    for (double p : ps) {
      for (std::int64_t m : ms) {
        const long double want = binom_cdf_oracle(n, p, m);
        const long double got = binomial_cdf(n, p, m);
        const long double denom = std::max(want, 1e-4900L);
        max_rel = std::max(max_rel, std::fabs(got - want) / denom);
      }
    }
  }
  return max_rel;
}

CriterionResult criterion_5(std::uint64_t seed) {
  CriterionResult out{5, "adversarial-grid-closed-form", false, ""};
  const std::size_t n_cal = 10;
  const double p = 0.95;
  const double alpha = 0.3;

  const std::uint64_t N = counterexample_sufficient_N(n_cal, p, alpha);
  const bool n_ok = (N == 1866409009ull);

  CounterexampleParams params;
  params.p = p;
  params.N = N;
  params.n_cal = n_cal;
  params.alpha = alpha;

  // Column feasibility mass, pinned independently: with 10 draws at p=0.95
  // a calibration count <= 2 has probability (1 + 10*19 + 45*361)/20^10.
  const detail::CxLaw law = detail::counterexample_law(params, Calibrator::naive);
  const double q_expected = 1.605078125e-9;
  const bool q_ok =
      std::fabs(static_cast<double>(law.q) - q_expected) <= 1e-6 * q_expected;

  const double closed = closed_form_counterexample_risk(params);
  const TrialSummary s =
      counterexample_monte_carlo(params, 20000, Calibrator::naive, seed);
  const bool mc_ok =
      std::fabs(s.mean_risk - closed) <= 4.0 * s.std_error &&
      s.mean_risk > alpha;

  const long double max_rel = binomial_grid_max_rel_error();
  const bool bin_ok = max_rel <= 1e-12L;

  out.passed = n_ok && q_ok && mc_ok && bin_ok;
  out.detail = "N=" + std::to_string(N) + (n_ok ? "" : " (WRONG)") +
               ", mc mean=" + fmt(s.mean_risk) + " vs closed form " +
               fmt(closed) + " (se=" + fmt(s.std_error, 3) +
               "), mean > alpha: " + (s.mean_risk > alpha ? "yes" : "NO") +
               ", binomial max rel err=" + fmt(static_cast<double>(max_rel), 3) +
               (q_ok ? "" : ", column mass off");
  return out;
}

CriterionResult criterion_6(std::uint64_t seed) {
  CriterionResult out{6, "adversarial-grid-rescue", false, ""};
  CounterexampleParams params;
  params.p = 0.95;
  params.n_cal = 10;
  params.alpha = 0.3;
  params.N = counterexample_sufficient_N(params.n_cal, params.p, params.alpha);
  const TrialSummary s = counterexample_monte_carlo(
      params, 20000, Calibrator::monotonized_corrected, seed);
  const double upper = params.alpha + 4.0 * s.std_error;
  out.passed = s.mean_risk <= upper;
  out.detail = "mean=" + fmt(s.mean_risk) + " <= " + fmt(upper) +
               " (same draws that break the unmonotonized selection), se=" +
               fmt(s.std_error, 3);
  return out;
}

CriterionResult criterion_7(std::uint64_t seed) {
  CriterionResult out{7, "risk-jump-bound", false, ""};
  TightnessParams params;
  params.k = 3;
  params.eps_prime = 0.25;
  params.n = 10;
  const JumpLemmaReport rep =
      verify_jump_lemma(gen_tightness(params), 1000, seed);
  out.passed = rep.max_jump <= 0.1 && rep.collisions == 0;
  out.detail = "max jump=" + fmt(rep.max_jump) +
               " (bound 1/11=" + fmt(1.0 / 11.0) + ", limit 0.1), " +
               "breakpoint collisions=" + std::to_string(rep.collisions) +
               " across " + std::to_string(rep.trials) + " trials";
  return out;
}

CriterionResult criterion_8(std::uint64_t seed) {
  CriterionResult out{8, "near-monotone-band", false, ""};
  NearMonotoneParams params;
  params.n = 10000;
  const double alpha = 0.3;
  const TrialSummary s =
      monte_carlo_risk(gen_near_monotone(params), RiskSpec{alpha, 1.0}, 2000,
                       Calibrator::monotonized, seed);
  const double budget = 0.01;  // excess allowed for absorbing the bump
  const double bound = alpha + budget + 4.0 * s.std_error;
  out.passed = s.mean_risk <= bound;
  out.detail = "mean=" + fmt(s.mean_risk) + " <= " + fmt(bound) +
               " (alpha + " + fmt(budget) + " excess budget), se=" +
               fmt(s.std_error, 3);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: loss constructors against literal brute-force oracles,
// compared exactly at and around every breakpoint.

double oracle_fnr(const std::vector<double>& scores,
                  const std::vector<std::size_t>& labels, double lambda) {
  std::size_t covered = 0;
  for (std::size_t k : labels) {
    if (1.0 - scores[k] <= lambda) ++covered;
  }
  return 1.0 - static_cast<double>(covered) / static_cast<double>(labels.size());
}

std::vector<std::size_t> oracle_leaves_under(const ClassTree& tree,
                                             std::size_t node) {
  std::vector<std::size_t> found;
  std::vector<std::size_t> stack{node};
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (tree.is_leaf(v)) found.push_back(v);
    for (std::size_t c : tree.children(v)) stack.push_back(c);
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<std::size_t> oracle_bfs(const std::vector<std::vector<std::size_t>>& adj,
                                    std::size_t start) {
  std::vector<std::size_t> dist(adj.size(), static_cast<std::size_t>(-1));
  std::queue<std::size_t> frontier;
  dist[start] = 0;
  frontier.push(start);
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (std::size_t u : adj[v]) {
      if (dist[u] == static_cast<std::size_t>(-1)) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

double oracle_graph(const ClassTree& tree, const std::vector<double>& scores,
                    std::size_t true_leaf, double lambda) {
  const std::vector<std::size_t>& leaves = tree.leaves();
  std::size_t y_hat = leaves.front();
  for (std::size_t leaf : leaves) {
    if (scores[leaf] > scores[y_hat]) y_hat = leaf;
  }
  if (tree.max_depth() == 0) return 0.0;

  // Deepest ancestor of y_hat whose subtree mass strictly exceeds lambda
  // (summed in ascending leaf id, matching the constructor's order so equal
  // masses are equal doubles); none -> the full leaf set.
  std::optional<std::size_t> pick;
  for (std::size_t a : tree.ancestors_or_self(y_hat)) {
    double mass = 0.0;
    for (std::size_t s : oracle_leaves_under(tree, a)) mass += scores[s];
    if (mass > lambda) {
      pick = a;
      break;
    }
  }
  const std::vector<std::size_t> set =
      pick ? oracle_leaves_under(tree, *pick) : leaves;

  std::vector<std::vector<std::size_t>> adj(tree.size());
  for (std::size_t v = 0; v < tree.size(); ++v) {
    for (std::size_t c : tree.children(v)) {
      adj[v].push_back(c);
      adj[c].push_back(v);
    }
  }
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::size_t a : tree.ancestors_or_self(true_leaf)) {
    const std::vector<std::size_t> dist = oracle_bfs(adj, a);
    for (std::size_t s : set) best = std::min(best, dist[s]);
  }
  return static_cast<double>(best) / static_cast<double>(tree.max_depth());
}

// Sorted two-pointer bag intersection; same final 2PR/(P+R) arithmetic as
// production but an independent common-count route.
double oracle_token_f1(std::vector<std::string> pred,
                       std::vector<std::string> gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  const std::size_t pred_n = pred.size();
  const std::size_t gold_n = gold.size();
  std::sort(pred.begin(), pred.end());
  std::sort(gold.begin(), gold.end());
  std::size_t common = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < pred.size() && j < gold.size()) {
    if (pred[i] == gold[j]) {
      ++common;
      ++i;
      ++j;
    } else if (pred[i] < gold[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  if (common == 0) return 0.0;
  const double precision =
      static_cast<double>(common) / static_cast<double>(pred_n);
  const double recall =
      static_cast<double>(common) / static_cast<double>(gold_n);
  return 2.0 * precision * recall / (precision + recall);
}

double oracle_f1(const std::vector<ScoredCandidate>& candidates,
                 const std::vector<std::string>& golds, double lambda) {
  double best = 0.0;
  for (const ScoredCandidate& cand : candidates) {
    if (-cand.score <= lambda) {
      for (const std::string& gold : golds) {
        best = std::max(best, oracle_token_f1(normalize_tokens(cand.text),
                                              normalize_tokens(gold)));
      }
    }
  }
  return 1.0 - best;
}

// Probe set for one step function: every breakpoint, a point just below it,
// both tails, and a few interior draws.
std::vector<double> probe_points(const StepLoss& loss, Rng& rng, double span_lo,
                                 double span_hi) {
  std::vector<double> probes;
  for (double bp : loss.breakpoints) {
    probes.push_back(bp);
    probes.push_back(std::nextafter(bp, -kPosInf));
  }
  if (!loss.breakpoints.empty()) {
    probes.push_back(loss.breakpoints.front() - 1.0);
    probes.push_back(loss.breakpoints.back() + 1.0);
  }
  for (int i = 0; i < 4; ++i) probes.push_back(rng.uniform(span_lo, span_hi));
  return probes;
}

CriterionResult criterion_9(std::uint64_t seed) {
  CriterionResult out{9, "loss-constructor-oracles", false, ""};
  Rng rng(master_key(seed).child(9009));
  const std::size_t kInstances = 500;
  std::size_t fnr_bad = 0;
  std::size_t graph_bad = 0;
  std::size_t f1_bad = 0;
  std::size_t shape_bad = 0;

  // Small token pool: overlaps, multiplicities, articles, punctuation, case.
  const std::vector<std::string> words = {
      "the",   "march", "of",    "Folly",  "from,", "troy",   "TO",
      "viet!", "nam;",  "a",     "an",     "March", "folly?", "1984",
      "war",   "peace", "(and)", "again",  "again", "x-ray"};

  for (std::size_t inst = 0; inst < kInstances; ++inst) {
    // --- false negative rate ---
    {
      const std::size_t classes = 2 + static_cast<std::size_t>(rng.bounded(15));
      std::vector<double> scores(classes);
      for (double& s : scores) {
        s = rng.next_unit();
        if (rng.next_unit() < 0.3) s = std::round(s * 10.0) / 10.0;
      }
      std::vector<std::size_t> ids(classes);
      for (std::size_t k = 0; k < classes; ++k) ids[k] = k;
      for (std::size_t k = classes - 1; k > 0; --k) {
        std::swap(ids[k], ids[rng.bounded(k + 1)]);
      }
      const std::size_t m = 1 + static_cast<std::size_t>(rng.bounded(classes));
      const std::vector<std::size_t> labels(ids.begin(), ids.begin() + m);

      const StepLoss loss = fnr_loss(scores, labels);
      if (!loss.non_increasing()) ++shape_bad;
      for (double lambda : probe_points(loss, rng, -0.5, 1.5)) {
        if (loss.eval(lambda) != oracle_fnr(scores, labels, lambda)) {
          ++fnr_bad;
          break;
        }
      }
    }

    // --- hierarchical graph distance ---
    {
      const std::size_t nodes = 2 + static_cast<std::size_t>(rng.bounded(49));
      std::vector<std::int64_t> parent(nodes);
      parent[0] = -1;
      for (std::size_t v = 1; v < nodes; ++v) {
        parent[v] = static_cast<std::int64_t>(rng.bounded(v));
      }
      const ClassTree tree(parent);
      std::vector<double> scores(nodes, 0.0);
      for (std::size_t leaf : tree.leaves()) {
        double s = rng.next_unit();
        if (rng.next_unit() < 0.2) s = std::round(s * 5.0) / 5.0;
        scores[leaf] = s;
      }
      const std::size_t true_leaf =
          tree.leaves()[rng.bounded(tree.leaves().size())];

      const StepLoss loss = graph_distance_loss(tree, scores, true_leaf);
      if (!loss.non_increasing()) ++shape_bad;
      double hi = 1.0;
      for (std::size_t leaf : tree.leaves()) hi += scores[leaf];
      for (double lambda : probe_points(loss, rng, -1.0, hi)) {
        if (loss.eval(lambda) != oracle_graph(tree, scores, true_leaf, lambda)) {
          ++graph_bad;
          break;
        }
      }
    }

    // --- token F1 ---
    {
      const std::size_t cands = 1 + static_cast<std::size_t>(rng.bounded(20));
      std::vector<ScoredCandidate> candidates(cands);
      for (ScoredCandidate& cand : candidates) {
        const std::size_t len = 1 + static_cast<std::size_t>(rng.bounded(6));
        std::string text;
        for (std::size_t w = 0; w < len; ++w) {
          if (w > 0) text += ' ';
          text += words[rng.bounded(words.size())];
        }
        cand.text = text;
        cand.score = rng.uniform(-2.0, 2.0);
        if (rng.next_unit() < 0.25) cand.score = std::round(cand.score * 4.0) / 4.0;
      }
      const std::size_t gold_n = 1 + static_cast<std::size_t>(rng.bounded(3));
      std::vector<std::string> golds(gold_n);
      for (std::string& gold : golds) {
        const std::size_t len = 1 + static_cast<std::size_t>(rng.bounded(5));
        std::string text;
        for (std::size_t w = 0; w < len; ++w) {
          if (w > 0) text += ' ';
          text += words[rng.bounded(words.size())];
        }
        gold = text;
      }

      const StepLoss loss = f1_loss(candidates, golds);
      if (!loss.non_increasing()) ++shape_bad;
      for (double lambda : probe_points(loss, rng, -3.0, 3.0)) {
        if (loss.eval(lambda) != oracle_f1(candidates, golds, lambda)) {
          ++f1_bad;
          break;
        }
      }
    }
  }

  out.passed = fnr_bad == 0 && graph_bad == 0 && f1_bad == 0 && shape_bad == 0;
  out.detail = std::to_string(kInstances) +
               " instances per family: fnr mismatches=" +
               std::to_string(fnr_bad) +
               ", graph mismatches=" + std::to_string(graph_bad) +
               ", f1 mismatches=" + std::to_string(f1_bad) +
               ", shape violations=" + std::to_string(shape_bad);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 10: evaluate/simulate outputs are byte-identical across repeat
// runs and across thread counts.

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli_capture(const std::vector<std::string>& args, std::string& stdout_text) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  stdout_text = out.str();
  return code;
}

CriterionResult criterion_10(std::uint64_t seed) {
  CriterionResult out{10, "deterministic-reports", false, ""};
  namespace fs = std::filesystem;

  const fs::path root =
      fs::temp_directory_path() /
      ("riskcal-verify-" + std::to_string(seed) + "-" +
       std::to_string(static_cast<std::uint64_t>(
           std::chrono::steady_clock::now().time_since_epoch().count())));
  fs::create_directories(root);

  bool ok = true;
  std::string note;
  try {
    // Input: 80 indicator rows plus a set-size curve per row.
    Rng rng(master_key(seed).child(77));
    std::vector<StepLoss> rows;
    std::vector<StepLoss> sizes;
    for (int i = 0; i < 80; ++i) {
      const double score = rng.next_unit();
      rows.push_back(miscoverage_loss(score));
      StepLoss size_curve;
      size_curve.breakpoints = {score};
      size_curve.values = {1.0, std::floor(rng.uniform(2.0, 9.0))};
      sizes.push_back(size_curve);
    }
    const LossTable table = LossTable::assemble(std::move(rows), 1.0);
    const fs::path input = root / "table.json";
    save_loss_table(input.string(), table, sizes);

    const auto eval_args = [&](const std::string& dir,
                               bool threaded) -> std::vector<std::string> {
      std::vector<std::string> args = {
          "evaluate",       "--input", input.string(), "--n-cal", "40",
          "--trials",       "50",      "--alpha",      "0.2",     "--seed",
          "123",            "--out",   (root / dir).string()};
      if (threaded) {
        args.push_back("--threads");
        args.push_back("4");
      }
      return args;
    };

    std::string stdout_a;
    std::string stdout_b;
    std::string stdout_c;
    if (run_cli_capture(eval_args("a", false), stdout_a) != 0) ok = false;
    if (run_cli_capture(eval_args("b", false), stdout_b) != 0) ok = false;
    if (run_cli_capture(eval_args("c", true), stdout_c) != 0) ok = false;

    std::size_t file_mismatches = 0;
    for (const char* name : {"report.json", "risk_hist.csv", "trials.csv"}) {
      const std::string a = slurp(root / "a" / name);
      if (a.empty() || a != slurp(root / "b" / name) ||
          a != slurp(root / "c" / name)) {
        ++file_mismatches;
      }
    }
    const bool eval_stdout_ok =
        !stdout_a.empty() && stdout_a == stdout_b && stdout_a == stdout_c;

    const std::vector<std::string> sim_base = {
        "simulate", "--scenario",  "tightness", "--n",    "20",
        "--k",      "3",           "--eps-prime", "0.25", "--trials",
        "200",      "--seed",      "9"};
    std::vector<std::string> sim_threaded = sim_base;
    sim_threaded.push_back("--threads");
    sim_threaded.push_back("4");
    std::string sim_a;
    std::string sim_b;
    std::string sim_c;
    if (run_cli_capture(sim_base, sim_a) != 0) ok = false;
    if (run_cli_capture(sim_base, sim_b) != 0) ok = false;
    if (run_cli_capture(sim_threaded, sim_c) != 0) ok = false;
    const bool sim_ok = !sim_a.empty() && sim_a == sim_b && sim_a == sim_c;

    ok = ok && file_mismatches == 0 && eval_stdout_ok && sim_ok;
    note = "evaluate: " + std::to_string(3 - file_mismatches) +
           "/3 report files byte-identical across reruns and threads, stdout " +
           (eval_stdout_ok ? "identical" : "DIFFERS") +
           "; simulate stdout " + (sim_ok ? "identical" : "DIFFERS");
  } catch (const std::exception& e) {
    ok = false;
    note = std::string("exception: ") + e.what();
  }

  std::error_code ec;
  fs::remove_all(root, ec);

  out.passed = ok;
  out.detail = note;
  return out;
}

}  // namespace

CriterionResult run_criterion(int id, std::uint64_t seed) {
  switch (id) {
    case 1: return criterion_1(seed);
    case 2: return criterion_2(seed);
    case 3: return criterion_3(seed);
    case 4: return criterion_4(seed);
    case 5: return criterion_5(seed);
    case 6: return criterion_6(seed);
    case 7: return criterion_7(seed);
    case 8: return criterion_8(seed);
    case 9: return criterion_9(seed);
    case 10: return criterion_10(seed);
    default:
      throw std::invalid_argument("criterion id must be in [1, " +
                                  std::to_string(kCriteriaCount) + "]");
  }
}

std::vector<CriterionResult> run_acceptance(std::uint64_t seed) {
  std::vector<CriterionResult> results;
  results.reserve(kCriteriaCount);
  for (int id = 1; id <= kCriteriaCount; ++id) {
    results.push_back(run_criterion(id, seed));
  }
  return results;
}

void print_criteria(const std::vector<CriterionResult>& results,
                    std::ostream& out) {
  for (const CriterionResult& r : results) {
    out << "criterion " << r.id << ' ' << (r.passed ? "PASS" : "FAIL") << ' '
        << r.name << ": " << r.detail << '\n';
  }
}

int count_failures(const std::vector<CriterionResult>& results) noexcept {
  int failures = 0;
  for (const CriterionResult& r : results) {
    if (!r.passed) ++failures;
  }
  return failures;
}

}  // namespace riskcal
