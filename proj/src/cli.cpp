#include "riskcal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

#include "riskcal/calibrate.hpp"
#include "riskcal/simulate.hpp"
#include "riskcal/split_eval.hpp"
#include "riskcal/step_loss.hpp"
#include "riskcal/table_io.hpp"
#include "riskcal/verify_suite.hpp"

namespace riskcal {

namespace {

using ordered_json = nlohmann::ordered_json;

// Invalid flag combinations and out-of-range parameter values; mapped to
// exit code 2 like any other configuration problem.
class ConfigError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

Calibrator calibrator_from_flags(bool monotonize, bool correction) {
  if (correction && !monotonize) {
    throw ConfigError("--correction only applies with --monotonize");
  }
  if (!monotonize) return Calibrator::naive;
  return correction ? Calibrator::monotonized_corrected
                    : Calibrator::monotonized;
}

Calibrator calibrator_from_name(const std::string& name) {
  if (name == "naive") return Calibrator::naive;
  if (name == "monotonized") return Calibrator::monotonized;
  if (name == "monotonized-corrected") return Calibrator::monotonized_corrected;
  throw ConfigError("unknown calibrator '" + name +
                    "' (expected naive, monotonized, or "
                    "monotonized-corrected)");
}

// JSON never carries infinities; the CLI prints sentinels as strings.
ordered_json json_threshold(double value) {
  if (std::isfinite(value)) return value;
  return value > 0 ? "inf" : "-inf";
}

void emit_error(std::ostream& err, const std::string& kind,
                const std::string& message,
                const std::vector<std::pair<std::string, ordered_json>>&
                    extra = {}) {
  ordered_json doc;
  doc["error"] = kind;
  doc["message"] = message;
  for (const auto& [key, value] : extra) doc[key] = value;
  err << doc.dump() << '\n';
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  std::string input;
  double alpha = 0.0;
  std::optional<double> bound;
  bool monotonize = false;
  bool correction = false;
};

int cmd_calibrate(const CalibrateOpts& opts, std::ostream& out) {
  const Calibrator cal =
      calibrator_from_flags(opts.monotonize, opts.correction);
  const ParsedTable parsed = load_loss_table(opts.input, opts.bound);
  const RiskSpec spec{opts.alpha, parsed.table.bound};

  CalibrationResult res;
  switch (cal) {
    case Calibrator::naive:
      res = calibrate(parsed.table, spec);
      break;
    case Calibrator::monotonized:
      res = calibrate_monotonized(parsed.table, spec, /*correction=*/false);
      break;
    case Calibrator::monotonized_corrected:
      res = calibrate_monotonized(parsed.table, spec, /*correction=*/true);
      break;
  }

  ordered_json doc;
  doc["n"] = parsed.table.size();
  doc["alpha"] = opts.alpha;
  doc["B"] = parsed.table.bound;
  doc["monotone_input"] = parsed.table.monotone;
  doc["calibrator"] = calibrator_name(cal);
  doc["lambda_hat"] = json_threshold(res.lambda_hat);
  doc["sentinel"] = res.sentinel();
  doc["empirical_risk"] = res.empirical_risk;
  doc["inflated_risk"] = res.inflated_risk;
  doc["attained_breakpoint"] = res.attained_breakpoint
                                   ? ordered_json(*res.attained_breakpoint)
                                   : ordered_json(nullptr);
  out << doc.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// quantile

struct QuantileOpts {
  std::string scores_path;
  double alpha = 0.0;
};

std::vector<double> read_score_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file", std::nullopt, path);
  std::vector<double> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;  // blank line
    const auto last = line.find_last_not_of(" \t");
    const std::string token = line.substr(first, last - first + 1);
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) {
        throw ParseError("trailing characters after number: '" + token + "'",
                         line_no, path);
      }
      scores.push_back(value);
    } catch (const std::invalid_argument&) {
      throw ParseError("expected a number, got '" + token + "'", line_no,
                       path);
    } catch (const std::out_of_range&) {
      throw ParseError("number out of range: '" + token + "'", line_no, path);
    }
  }
  if (scores.empty()) {
    throw ParseError("score file holds no values", std::nullopt, path);
  }
  return scores;
}

int cmd_quantile(const QuantileOpts& opts, std::ostream& out) {
  std::vector<double> scores = read_score_file(opts.scores_path);
  const std::size_t n = scores.size();
  const QuantileResult res = conformal_quantile(std::move(scores), opts.alpha);

  ordered_json doc;
  doc["n"] = n;
  doc["alpha"] = opts.alpha;
  doc["threshold"] = json_threshold(res.threshold);
  doc["finite"] = res.finite;
  doc["order_index"] = res.order_index;
  out << doc.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  std::string input;
  std::size_t n_cal = 0;
  std::size_t trials = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::optional<double> bound;
  unsigned threads = 1;
  bool monotonize = false;
  bool correction = false;
};

int cmd_evaluate(const EvaluateOpts& opts, std::ostream& out) {
  SplitEvalConfig config;
  config.n_cal = opts.n_cal;
  config.trials = opts.trials;
  config.alpha = opts.alpha;
  config.seed = opts.seed;
  config.threads = opts.threads;
  config.calibrator = calibrator_from_flags(opts.monotonize, opts.correction);

  const ParsedTable data = load_loss_table(opts.input, opts.bound);
  const SplitEvalReport report = split_evaluate(data, config);
  write_split_report(report, opts.out_dir);
  // stdout carries the exact report.json text: no paths, thread counts, or
  // timing, so runs with identical inputs produce identical bytes.
  out << split_report_json_text(report);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string scenario;
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  bool alpha_given = false;
  std::uint64_t k = 1;
  double eps_prime = 0.5;
  bool k_given = false;
  bool eps_given = false;
  double p = 0.5;
  bool p_given = false;
  std::uint64_t grid_n = 0;
  bool grid_n_given = false;
  std::string calibrator = "naive";
  unsigned threads = 1;
};

void reject_foreign_params(const SimulateOpts& opts) {
  const bool is_tightness = opts.scenario == "tightness";
  const bool is_counterexample = opts.scenario == "counterexample";
  if (!is_tightness && (opts.k_given || opts.eps_given)) {
    throw ConfigError("--k/--eps-prime only apply to --scenario tightness");
  }
  if (!is_counterexample && (opts.p_given || opts.grid_n_given)) {
    throw ConfigError("--p/--N only apply to --scenario counterexample");
  }
  if (is_tightness && opts.alpha_given) {
    throw ConfigError(
        "tightness derives alpha from --k/--eps-prime; do not pass --alpha");
  }
}

ordered_json histogram_json(const Histogram& h) {
  ordered_json doc;
  doc["lo"] = h.lo;
  doc["hi"] = h.hi;
  doc["counts"] = h.counts;
  return doc;
}

ordered_json summary_json(const TrialSummary& s) {
  ordered_json doc;
  doc["mean_risk"] = s.mean_risk;
  doc["std_dev"] = s.std_dev;
  doc["std_error"] = s.std_error;
  doc["histogram"] = histogram_json(s.histogram);
  return doc;
}

int cmd_simulate(const SimulateOpts& opts, std::ostream& out) {
  reject_foreign_params(opts);
  const Calibrator cal = calibrator_from_name(opts.calibrator);

  ordered_json doc;
  doc["scenario"] = opts.scenario;
  doc["n"] = opts.n;
  doc["trials"] = opts.trials;
  doc["seed"] = opts.seed;
  doc["calibrator"] = calibrator_name(cal);

  ordered_json params;
  ordered_json analytic;
  TrialSummary summary;

  if (opts.scenario == "tightness") {
    TightnessParams tp;
    tp.k = opts.k;
    tp.eps_prime = opts.eps_prime;
    tp.n = opts.n;
    tp.validate();
    const double alpha = tp.alpha();
    params["k"] = tp.k;
    params["eps_prime"] = tp.eps_prime;
    params["alpha"] = alpha;
    const RiskSpec spec{alpha, 1.0};
    summary = monte_carlo_risk(gen_tightness(tp), spec, opts.trials, cal,
                               opts.seed, opts.threads);
    analytic["alpha"] = alpha;
    analytic["lower_band"] =
        alpha - 2.0 / static_cast<double>(opts.n + 1);
  } else if (opts.scenario == "miscoverage") {
    const double alpha = opts.alpha_given ? opts.alpha : 0.1;
    params["alpha"] = alpha;
    const RiskSpec spec{alpha, 1.0};
    summary = monte_carlo_risk(gen_miscoverage_uniform(opts.n), spec,
                               opts.trials, cal, opts.seed, opts.threads);
    analytic["alpha"] = alpha;
    analytic["lower_band"] =
        alpha - 2.0 / static_cast<double>(opts.n + 1);
  } else if (opts.scenario == "near-monotone") {
    const double alpha = opts.alpha_given ? opts.alpha : 0.3;
    NearMonotoneParams np;
    np.n = opts.n;
    np.validate();
    params["alpha"] = alpha;
    params["bump_height"] = np.bump_height;
    params["bump_min"] = np.bump_min;
    params["bump_max"] = np.bump_max;
    params["bump_width"] = np.bump_width;
    const RiskSpec spec{alpha, 1.0};
    summary = monte_carlo_risk(gen_near_monotone(np), spec, opts.trials, cal,
                               opts.seed, opts.threads);
    analytic["alpha"] = alpha;
    analytic["lower_band"] =
        alpha - 2.0 / static_cast<double>(opts.n + 1);
  } else if (opts.scenario == "counterexample") {
    CounterexampleParams cp;
    cp.p = opts.p;
    cp.n_cal = opts.n;
    cp.alpha = opts.alpha_given ? opts.alpha : 0.3;
    cp.N = opts.grid_n_given
               ? opts.grid_n
               : counterexample_sufficient_N(cp.n_cal, cp.p, cp.alpha);
    cp.validate();
    params["alpha"] = cp.alpha;
    params["p"] = cp.p;
    params["N"] = cp.N;
    params["N_auto"] = !opts.grid_n_given;
    summary = counterexample_monte_carlo(cp, opts.trials, cal, opts.seed,
                                         opts.threads);
    analytic["alpha"] = cp.alpha;
    analytic["lower_band"] =
        cp.alpha - 2.0 / static_cast<double>(opts.n + 1);
    analytic["closed_form_risk"] = closed_form_counterexample_risk(cp);
  } else {
    throw ConfigError("unknown scenario '" + opts.scenario + "'");
  }

  doc["params"] = params;
  doc["analytic"] = analytic;
  doc["summary"] = summary_json(summary);
  out << doc.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOpts {
  int criterion = 0;  // 0 = all
  std::uint64_t seed = kAcceptanceSeed;
};

int cmd_verify(const VerifyOpts& opts, std::ostream& out) {
  std::vector<CriterionResult> results;
  if (opts.criterion == 0) {
    results = run_acceptance(opts.seed);
  } else {
    results.push_back(run_criterion(opts.criterion, opts.seed));
  }
  print_criteria(results, out);
  return count_failures(results) > 0 ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Distribution-free risk calibration toolkit"};
  app.name("riskcal");
  app.require_subcommand(1);

  CalibrateOpts cal_opts;
  CLI::App* cal = app.add_subcommand(
      "calibrate", "Select a risk-controlling threshold from a loss table");
  cal->add_option("--input", cal_opts.input, "Loss table (CSV or JSON)")
      ->required();
  cal->add_option("--alpha", cal_opts.alpha, "Target risk level in (0, B)")
      ->required();
  cal->add_option("--B", cal_opts.bound,
                  "Loss bound (required for CSV; overrides JSON)");
  cal->add_flag("--monotonize", cal_opts.monotonize,
                "Monotonize the summed risk before thresholding");
  cal->add_flag("--correction", cal_opts.correction,
                "Keep the +B/(n+1) inflation with --monotonize");

  QuantileOpts q_opts;
  CLI::App* quant = app.add_subcommand(
      "quantile", "Split-conformal score threshold");
  quant->add_option("--scores", q_opts.scores_path,
                    "Text file, one score per line")
      ->required();
  quant->add_option("--alpha", q_opts.alpha, "Miscoverage level in (0, 1)")
      ->required();

  EvaluateOpts ev_opts;
  CLI::App* ev = app.add_subcommand(
      "evaluate", "Random-split calibration/test evaluation of a loss table");
  ev->add_option("--input", ev_opts.input, "Loss table (CSV or JSON)")
      ->required();
  ev->add_option("--n-cal", ev_opts.n_cal, "Calibration rows per split")
      ->required();
  ev->add_option("--trials", ev_opts.trials, "Number of random splits")
      ->required();
  ev->add_option("--alpha", ev_opts.alpha, "Target risk level")->required();
  ev->add_option("--seed", ev_opts.seed, "Master seed")->required();
  ev->add_option("--out", ev_opts.out_dir, "Report directory")->required();
  ev->add_option("--B", ev_opts.bound,
                 "Loss bound (required for CSV; overrides JSON)");
  ev->add_option("--threads", ev_opts.threads, "Worker threads");
  ev->add_flag("--monotonize", ev_opts.monotonize,
               "Monotonize the summed risk before thresholding");
  ev->add_flag("--correction", ev_opts.correction,
               "Keep the +B/(n+1) inflation with --monotonize");

  SimulateOpts sim_opts;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Monte Carlo risk of a calibrator on a synthetic scenario");
  sim->add_option("--scenario", sim_opts.scenario, "Scenario name")
      ->required()
      ->check(CLI::IsMember(
          {"tightness", "counterexample", "miscoverage", "near-monotone"}));
  sim->add_option("--n", sim_opts.n, "Calibration rows per trial")->required();
  sim->add_option("--trials", sim_opts.trials, "Trial count")->required();
  sim->add_option("--seed", sim_opts.seed, "Master seed")->required();
  CLI::Option* alpha_opt =
      sim->add_option("--alpha", sim_opts.alpha, "Target risk level");
  CLI::Option* k_opt =
      sim->add_option("--k", sim_opts.k, "Tightness plateau index (>= 1)");
  CLI::Option* eps_opt = sim->add_option(
      "--eps-prime", sim_opts.eps_prime, "Tightness offset in (0, 1)");
  CLI::Option* p_opt = sim->add_option(
      "--p", sim_opts.p, "Counterexample cell probability");
  CLI::Option* grid_opt = sim->add_option(
      "--N", sim_opts.grid_n, "Counterexample grid resolution (default: auto)");
  sim->add_option("--calibrator", sim_opts.calibrator,
                  "naive | monotonized | monotonized-corrected")
      ->check(CLI::IsMember(
          {"naive", "monotonized", "monotonized-corrected"}));
  sim->add_option("--threads", sim_opts.threads, "Worker threads");

  VerifyOpts ver_opts;
  CLI::App* ver = app.add_subcommand(
      "verify", "Run the acceptance checklist");
  ver->add_option("--criterion", ver_opts.criterion,
                  "Criterion id 1-10 (default: all)")
      ->check(CLI::Range(0, kCriteriaCount));
  ver->add_option("--seed", ver_opts.seed, "Master seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    sim_opts.alpha_given = alpha_opt->count() > 0;
    sim_opts.k_given = k_opt->count() > 0;
    sim_opts.eps_given = eps_opt->count() > 0;
    sim_opts.p_given = p_opt->count() > 0;
    sim_opts.grid_n_given = grid_opt->count() > 0;

    if (app.got_subcommand(cal)) return cmd_calibrate(cal_opts, out);
    if (app.got_subcommand(quant)) return cmd_quantile(q_opts, out);
    if (app.got_subcommand(ev)) return cmd_evaluate(ev_opts, out);
    if (app.got_subcommand(sim)) return cmd_simulate(sim_opts, out);
    if (app.got_subcommand(ver)) return cmd_verify(ver_opts, out);
    emit_error(err, "config", "no subcommand given");
    return 2;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    emit_error(err, "config", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    std::vector<std::pair<std::string, ordered_json>> extra;
    extra.emplace_back("min_inflated_risk",
                       ordered_json(e.min_inflated_risk()));
    if (e.trial()) extra.emplace_back("trial", ordered_json(*e.trial()));
    emit_error(err, "infeasible", e.what(), extra);
    return 1;
  } catch (const ParseError& e) {
    std::vector<std::pair<std::string, ordered_json>> extra;
    if (!e.path().empty()) extra.emplace_back("path", ordered_json(e.path()));
    if (e.line()) extra.emplace_back("line", ordered_json(*e.line()));
    emit_error(err, "parse", e.what(), extra);
    return 2;
  } catch (const std::invalid_argument& e) {
    emit_error(err, "config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what());
    return 2;
  }
}

}  // namespace riskcal
