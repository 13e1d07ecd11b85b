#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "nlohmann/json.hpp"
#include "riskcal/calibrate.hpp"
#include "riskcal/cli.hpp"
#include "riskcal/losses.hpp"
#include "riskcal/rng.hpp"
#include "riskcal/simulate.hpp"
#include "riskcal/split_eval.hpp"
#include "riskcal/step_loss.hpp"
#include "riskcal/table_io.hpp"

using namespace riskcal;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp root, removed on scope exit.
struct TempDir {
  fs::path path;
  TempDir() {
    static std::uint64_t counter = 0;
    path = fs::temp_directory_path() /
           ("riskcal-io-" + std::to_string(++counter) + "-" +
            std::to_string(static_cast<std::uint64_t>(
                std::chrono::steady_clock::now().time_since_epoch().count())));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

LossTable sample_table() {
  StepLoss r1;
  r1.breakpoints = {0.25, 0.5};
  r1.values = {1.0, 0.625, 0.0};
  StepLoss r2;
  r2.breakpoints = {1.0 / 3.0};
  r2.values = {0.875, 0.25};
  StepLoss r3 = StepLoss::constant(0.375);
  return LossTable::assemble({r1, r2, r3}, 2.0);
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON format

TEST_CASE("json round-trip preserves curves, bound, and sizes exactly") {
  TempDir dir;
  const LossTable table = sample_table();
  std::vector<StepLoss> sizes;
  sizes.push_back(StepLoss::constant(1.0));
  StepLoss s2;
  s2.breakpoints = {0.5};
  s2.values = {1.0, 4.0};
  sizes.push_back(s2);
  sizes.push_back(StepLoss::constant(2.0));

  const std::string path = dir.file("table.json");
  save_loss_table(path, table, sizes);
  const ParsedTable back = load_loss_table(path);
  CHECK(back.table.rows == table.rows);
  CHECK(back.table.bound == 2.0);
  CHECK(back.sizes == sizes);

  // A caller override replaces the stored bound.
  const ParsedTable raised = load_loss_table(path, 5.0);
  CHECK(raised.table.bound == 5.0);
  CHECK(raised.table.rows == table.rows);
}

TEST_CASE("json round-trips a finite domain start; csv refuses it") {
  TempDir dir;
  StepLoss row;
  row.breakpoints = {0.5, 0.75};
  row.values = {1.0, 0.5, 0.0};
  row.domain_min = 0.0;
  const LossTable table = LossTable::assemble({row}, 1.0);

  const std::string jpath = dir.file("grid.json");
  save_loss_table(jpath, table);
  const ParsedTable back = load_loss_table(jpath);
  CHECK(back.table.domain_min == 0.0);
  CHECK(back.table.rows == table.rows);

  CHECK_THROWS_AS(save_loss_table(dir.file("grid.csv"), table),
                  std::invalid_argument);
}

TEST_CASE("json shared-grid shape expands to per-row curves") {
  TempDir dir;
  const std::string path = dir.file("shared.json");
  write_file(path, R"({
    "B": 1.0,
    "lambdas": [0.2, 0.6],
    "rows": [[1.0, 0.5, 0.0], [1.0, 1.0, 0.0]],
    "sizes": [[1.0, 2.0, 3.0], [1.0, 1.0, 5.0]]
  })");
  const ParsedTable parsed = load_loss_table(path);
  REQUIRE(parsed.table.size() == 2);
  CHECK(parsed.table.rows[0].breakpoints == std::vector<double>{0.2, 0.6});
  CHECK(parsed.table.rows[0].values == std::vector<double>{1.0, 0.5, 0.0});
  // The second row's first cell repeats, so it collapses to one breakpoint.
  CHECK(parsed.table.rows[1].breakpoints == std::vector<double>{0.6});
  CHECK(parsed.table.rows[1].values == std::vector<double>{1.0, 0.0});
  REQUIRE(parsed.sizes.size() == 2);
  CHECK(parsed.sizes[0].values == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(parsed.sizes[1].breakpoints == std::vector<double>{0.6});
}

TEST_CASE("json parse failures carry the path") {
  TempDir dir;
  const std::string path = dir.file("bad.json");

  write_file(path, "{ not json ");
  CHECK_THROWS_AS(load_loss_table(path), ParseError);

  write_file(path, R"({"rows": [{"breakpoints": [], "values": [0.0]}]})");
  try {
    load_loss_table(path);
    FAIL("expected ParseError for a missing bound");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("'B'") != std::string::npos);
    CHECK(e.path() == path);
    CHECK_FALSE(e.line().has_value());
  }

  write_file(path, R"({"B": 1.0})");
  CHECK_THROWS_AS(load_loss_table(path), ParseError);

  // Values above the stored bound are rejected at load time.
  write_file(path,
             R"({"B": 0.5, "rows": [{"breakpoints": [], "values": [0.75]}]})");
  CHECK_THROWS_AS(load_loss_table(path), ParseError);

  // One size curve per loss row.
  write_file(path, R"({"B": 1.0,
    "rows": [{"breakpoints": [], "values": [0.0]}],
    "sizes": []})");
  CHECK_THROWS_AS(load_loss_table(path), ParseError);
}

// ---------------------------------------------------------------------------
// CSV format

TEST_CASE("csv round-trip reproduces canonical rows on the merged grid") {
  TempDir dir;
  StepLoss r1;
  r1.breakpoints = {0.25, 0.5};
  r1.values = {1.0, 1.0 / 3.0, 0.0};
  StepLoss r2;
  r2.breakpoints = {0.5, 0.75};
  r2.values = {0.9, 0.4, 0.1};
  const LossTable table = LossTable::assemble({r1, r2}, 1.0);
  std::vector<StepLoss> sizes;
  sizes.push_back(StepLoss::constant(3.0));
  StepLoss s2;
  s2.breakpoints = {0.6};
  s2.values = {1.0, 2.0};
  sizes.push_back(s2);

  const std::string path = dir.file("table.csv");
  save_loss_table(path, table, sizes);
  const ParsedTable back = load_loss_table(path, 1.0);
  CHECK(back.table.rows == table.rows);
  CHECK(back.table.bound == 1.0);
  CHECK(back.sizes == sizes);
}

TEST_CASE("csv parse failures name the offending line") {
  TempDir dir;
  const std::string path = dir.file("bad.csv");

  auto expect_line = [&](const std::string& text, std::size_t line,
                         const std::string& fragment) {
    write_file(path, text);
    try {
      load_loss_table(path, 1.0);
      FAIL("expected ParseError for: ", fragment);
    } catch (const ParseError& e) {
      INFO("message: ", e.what());
      REQUIRE(e.line().has_value());
      CHECK(*e.line() == line);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };

  expect_line("loss,1,0\n", 1, "lambda");
  expect_line("lambda,0.5,0.25\n", 1, "ascending");
  expect_line("lambda,abc\n", 1, "expected a number");
  expect_line("lambda,0.5\nloss,1,0\nloss,1\n", 3, "values");
  expect_line("lambda,0.5\nloss,1,oops\n", 2, "expected a number");
  expect_line("lambda,0.5\nrisk,1,0\n", 2, "unknown row tag");
  expect_line("lambda,0.5\nsize,1,2\n", 2, "directly follow");
  expect_line("lambda,0.5\nloss,1,0\nsize,1,2\nloss,1,0\nloss,0.5,0\n", 5,
              "every loss row needs one");
  expect_line("lambda,0.5\nloss,2,0\n", 2, "exceeds the bound");

  write_file(path, "");
  CHECK_THROWS_AS(load_loss_table(path, 1.0), ParseError);
  write_file(path, "lambda,0.5\n");
  CHECK_THROWS_AS(load_loss_table(path, 1.0), ParseError);
}

TEST_CASE("csv without an explicit bound is rejected with a pointer to --B") {
  TempDir dir;
  const std::string path = dir.file("nob.csv");
  write_file(path, "lambda,0.5\nloss,1,0\n");
  try {
    load_loss_table(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("carries no loss bound") !=
          std::string::npos);
  }
  // With the bound supplied, the same file loads.
  const ParsedTable parsed = load_loss_table(path, 1.0);
  CHECK(parsed.table.size() == 1);
  CHECK(parsed.table.bound == 1.0);
  CHECK(parsed.table.rows[0].values == std::vector<double>{1.0, 0.0});
}

TEST_CASE("format autodetection: extension first, then a content sniff") {
  TempDir dir;
  const LossTable table = sample_table();

  // No extension: JSON is recognized by its leading brace...
  const std::string jpath = dir.file("noext_json");
  save_loss_table(jpath, table, {}, TableFormat::json);
  CHECK(load_loss_table(jpath).table.rows == table.rows);

  // ...and anything else parses as CSV.
  const std::string cpath = dir.file("noext_csv");
  save_loss_table(cpath, table, {}, TableFormat::csv);
  CHECK(load_loss_table(cpath, 2.0).table.rows == table.rows);

  // Extensions win without sniffing.
  const std::string xpath = dir.file("table.csv");
  save_loss_table(xpath, table);
  CHECK(load_loss_table(xpath, 2.0).table.rows == table.rows);

  CHECK_THROWS_AS(load_loss_table(dir.file("missing.json")), ParseError);
}

TEST_CASE("doubles are written with shortest round-trip precision") {
  CHECK(detail::format_double(0.1) == "0.1");
  CHECK(detail::format_double(2.0) == "2");
  CHECK(std::stod(detail::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(std::stod(detail::format_double(0.09999999999999998)) ==
        0.09999999999999998);
}

// ---------------------------------------------------------------------------
// Split evaluation

namespace {

ParsedTable miscoverage_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(master_key(seed).child(500));
  std::vector<StepLoss> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(miscoverage_loss(rng.next_unit()));
  }
  ParsedTable data;
  data.table = LossTable::assemble(std::move(rows), 1.0);
  return data;
}

}  // namespace

TEST_CASE("split evaluation is deterministic and splits into single trials") {
  const ParsedTable data = miscoverage_dataset(80, 31);
  SplitEvalConfig config;
  config.n_cal = 40;
  config.trials = 25;
  config.alpha = 0.2;
  config.seed = 12345;

  const SplitEvalReport a = split_evaluate(data, config);
  const SplitEvalReport b = split_evaluate(data, config);
  CHECK(split_report_json_text(a) == split_report_json_text(b));

  SplitEvalConfig threaded = config;
  threaded.threads = 4;
  const SplitEvalReport c = split_evaluate(data, threaded);
  CHECK(c.risk.mean_risk == a.risk.mean_risk);
  CHECK(c.risk.std_dev == a.risk.std_dev);

  REQUIRE(a.records.size() == 25);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    const SplitTrialRecord solo = split_eval_trial(data, config, t);
    CHECK(solo.trial == a.records[t].trial);
    CHECK(solo.lambda_hat == a.records[t].lambda_hat);
    CHECK(solo.sentinel == a.records[t].sentinel);
    CHECK(solo.test_risk == a.records[t].test_risk);
    CHECK(solo.mean_set_size == a.records[t].mean_set_size);
  }

  CHECK(a.n_total == 80);
  CHECK(a.n_cal == 40);
  CHECK(a.n_test == 40);
  CHECK(a.band_upper == 0.2);
  CHECK(a.band_lower == 0.2 - 2.0 / 41.0);
  CHECK(a.lambda_hat.finite_trials + a.lambda_hat.sentinel_trials == 25);
  for (const SplitTrialRecord& rec : a.records) {
    CHECK(rec.sentinel == (rec.lambda_hat == kNegInf));
  }
}

TEST_CASE("split evaluation honors attached size curves") {
  ParsedTable data = miscoverage_dataset(30, 77);
  data.sizes.assign(30, StepLoss::constant(1.0));
  SplitEvalConfig config;
  config.n_cal = 10;
  config.trials = 8;
  config.alpha = 0.3;
  config.seed = 5;
  const SplitEvalReport report = split_evaluate(data, config);
  REQUIRE(report.mean_set_size.has_value());
  CHECK(*report.mean_set_size == 1.0);
  for (const SplitTrialRecord& rec : report.records) {
    REQUIRE(rec.mean_set_size.has_value());
    CHECK(*rec.mean_set_size == 1.0);
  }
}

TEST_CASE("split evaluation lands inside the analytic band on a big dataset") {
  const ParsedTable data = miscoverage_dataset(2000, 99);
  SplitEvalConfig config;
  config.n_cal = 1000;
  config.trials = 500;
  config.alpha = 0.1;
  config.seed = 20260816;
  const SplitEvalReport report = split_evaluate(data, config);
  const double se = report.risk.std_error;
  CHECK(report.risk.mean_risk <= 0.1 + 4.0 * se);
  CHECK(report.risk.mean_risk >= 0.1 - 2.0 / 1001.0 - 4.0 * se);
  CHECK(report.lambda_hat.finite_trials == 500);
}

TEST_CASE("split config validation") {
  const ParsedTable data = miscoverage_dataset(10, 1);
  SplitEvalConfig config;
  config.n_cal = 10;  // leaves no test rows
  config.trials = 4;
  config.alpha = 0.2;
  CHECK_THROWS_AS(split_evaluate(data, config), std::invalid_argument);
  config.n_cal = 0;
  CHECK_THROWS_AS(split_evaluate(data, config), std::invalid_argument);
  config.n_cal = 5;
  config.trials = 0;
  CHECK_THROWS_AS(split_evaluate(data, config), std::invalid_argument);
  config.trials = 1;
  config.alpha = 1.5;
  CHECK_THROWS_AS(split_evaluate(data, config), std::invalid_argument);
}

TEST_CASE("report files are byte-stable and match the in-memory text") {
  TempDir dir;
  const ParsedTable data = miscoverage_dataset(40, 3);
  SplitEvalConfig config;
  config.n_cal = 20;
  config.trials = 12;
  config.alpha = 0.25;
  config.seed = 777;
  const SplitEvalReport report = split_evaluate(data, config);

  const std::string out_a = (dir.path / "a").string();
  const std::string out_b = (dir.path / "b").string();
  write_split_report(report, out_a);
  write_split_report(report, out_b);

  const std::string text = split_report_json_text(report);
  CHECK(slurp(out_a + "/report.json") == text);
  CHECK(slurp(out_b + "/report.json") == text);
  CHECK(slurp(out_a + "/risk_hist.csv") == slurp(out_b + "/risk_hist.csv"));
  CHECK(slurp(out_a + "/trials.csv") == slurp(out_b + "/trials.csv"));

  // trials.csv: header plus one line per trial.
  std::istringstream trials(slurp(out_a + "/trials.csv"));
  std::string line;
  std::getline(trials, line);
  CHECK(line == "trial,lambda_hat,test_risk");
  std::size_t rows = 0;
  while (std::getline(trials, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 12);

  std::istringstream hist(slurp(out_a + "/risk_hist.csv"));
  std::getline(hist, line);
  CHECK(line == "bin_lo,bin_hi,count");

  // The JSON document itself parses and echoes the configuration.
  const json doc = json::parse(text);
  CHECK(doc["n_total"] == 40);
  CHECK(doc["n_cal"] == 20);
  CHECK(doc["trials"] == 12);
  CHECK(doc["seed"] == 777);
  CHECK(doc["calibrator"] == "naive");
  CHECK(doc.contains("risk"));
  CHECK(doc.contains("lambda_hat"));
  CHECK(doc.contains("analytic_band"));
  CHECK_FALSE(doc.contains("threads"));
}

// ---------------------------------------------------------------------------
// CLI

TEST_CASE("cli rejects missing and unknown arguments") {
  const CliResult none = cli({});
  CHECK(none.code == 2);
  CHECK(json::parse(none.err)["error"] == "config");

  const CliResult unknown = cli({"calibrate", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(json::parse(unknown.err)["error"] == "config");

  const CliResult stray = cli({"frobnicate"});
  CHECK(stray.code == 2);
}

TEST_CASE("cli help exits zero") {
  CHECK(cli({"--help"}).code == 0);
  const CliResult sub = cli({"calibrate", "--help"});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("--alpha") != std::string::npos);
}

TEST_CASE("cli calibrate reports the selected threshold") {
  TempDir dir;
  const std::string path = dir.file("scores.csv");
  write_file(path,
             "lambda,0.2,0.5,0.8\n"
             "loss,1,0,0,0\n"
             "loss,1,1,0,0\n"
             "loss,1,1,1,0\n");

  const CliResult r = cli({"calibrate", "--input", path, "--alpha", "0.5",
                           "--B", "1"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["n"] == 3);
  CHECK(doc["lambda_hat"] == 0.5);
  CHECK(doc["sentinel"] == false);
  CHECK(doc["empirical_risk"] == doctest::Approx(1.0 / 3.0));
  CHECK(doc["inflated_risk"] == 0.5);
  CHECK(doc["calibrator"] == "naive");
  CHECK(doc["monotone_input"] == true);

  // Without --B a CSV input cannot be loaded.
  const CliResult nob = cli({"calibrate", "--input", path, "--alpha", "0.5"});
  CHECK(nob.code == 2);
  CHECK(json::parse(nob.err)["error"] == "parse");

  // A level below 1/(n+1) is unattainable: exit 1 with diagnostics.
  const CliResult inf = cli({"calibrate", "--input", path, "--alpha", "0.2",
                             "--B", "1"});
  CHECK(inf.code == 1);
  const json err = json::parse(inf.err);
  CHECK(err["error"] == "infeasible");
  CHECK(err["min_inflated_risk"] == 0.25);
}

TEST_CASE("cli calibrate prints the sentinel as a string") {
  TempDir dir;
  const std::string path = dir.file("zeros.csv");
  write_file(path, "lambda,0.5\nloss,0,0\nloss,0,0\nloss,0,0\n");
  const CliResult r = cli({"calibrate", "--input", path, "--alpha", "0.5",
                           "--B", "1"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["lambda_hat"] == "-inf");
  CHECK(doc["sentinel"] == true);
}

TEST_CASE("cli correction flag requires monotonize") {
  TempDir dir;
  const std::string path = dir.file("t.csv");
  write_file(path, "lambda,0.5\nloss,1,0\n");
  const CliResult r = cli({"calibrate", "--input", path, "--alpha", "0.5",
                           "--B", "1", "--correction"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "config");
}

TEST_CASE("cli quantile mirrors conformal order statistics") {
  TempDir dir;
  const std::string path = dir.file("scores.txt");
  write_file(path, "1\n2\n\n3\n");
  const CliResult r = cli({"quantile", "--scores", path, "--alpha", "0.5"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["n"] == 3);
  CHECK(doc["threshold"] == 2.0);
  CHECK(doc["finite"] == true);
  CHECK(doc["order_index"] == 2);

  // An unattainably small level is a valid (infinite) answer, not an error.
  const CliResult top = cli({"quantile", "--scores", path, "--alpha", "0.01"});
  REQUIRE(top.code == 0);
  const json topdoc = json::parse(top.out);
  CHECK(topdoc["threshold"] == "inf");
  CHECK(topdoc["finite"] == false);

  const std::string bad = dir.file("bad.txt");
  write_file(bad, "1\nfoo\n");
  const CliResult broken = cli({"quantile", "--scores", bad, "--alpha", "0.5"});
  CHECK(broken.code == 2);
  const json errdoc = json::parse(broken.err);
  CHECK(errdoc["error"] == "parse");
  CHECK(errdoc["line"] == 2);
}

TEST_CASE("cli simulate validates scenario-parameter pairings") {
  // tightness derives its level from k and eps-prime; --alpha is foreign.
  const CliResult a = cli({"simulate", "--scenario", "tightness", "--n", "10",
                           "--trials", "5", "--seed", "1", "--alpha", "0.3"});
  CHECK(a.code == 2);
  CHECK(json::parse(a.err)["error"] == "config");

  const CliResult b = cli({"simulate", "--scenario", "miscoverage", "--n", "10",
                           "--trials", "5", "--seed", "1", "--p", "0.5"});
  CHECK(b.code == 2);

  const CliResult c = cli({"simulate", "--scenario", "counterexample", "--n",
                           "10", "--trials", "5", "--seed", "1", "--k", "2"});
  CHECK(c.code == 2);

  const CliResult d = cli({"simulate", "--scenario", "nonsense", "--n", "10",
                           "--trials", "5", "--seed", "1"});
  CHECK(d.code == 2);
}

TEST_CASE("cli simulate tightness reports the derived level") {
  const CliResult r =
      cli({"simulate", "--scenario", "tightness", "--n", "20", "--k", "3",
           "--eps-prime", "0.25", "--trials", "100", "--seed", "9"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["scenario"] == "tightness");
  CHECK(doc["trials"] == 100);
  CHECK(doc["params"]["k"] == 3);
  CHECK(doc["params"]["alpha"] == (4.0 - 0.25) / 21.0);
  CHECK(doc["analytic"]["alpha"] == (4.0 - 0.25) / 21.0);
  CHECK(doc["analytic"]["lower_band"] ==
        doctest::Approx((4.0 - 0.25) / 21.0 - 2.0 / 21.0));
  const double mean = doc["summary"]["mean_risk"].get<double>();
  CHECK(mean > 0.0);
  CHECK(mean < 1.0);
  std::uint64_t total = 0;
  for (const auto& c : doc["summary"]["histogram"]["counts"]) {
    total += c.get<std::uint64_t>();
  }
  CHECK(total == 100);
}

TEST_CASE("cli simulate counterexample carries the closed form") {
  const CliResult r =
      cli({"simulate", "--scenario", "counterexample", "--n", "8", "--p",
           "0.5", "--N", "32", "--alpha", "0.35", "--trials", "60", "--seed",
           "4"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["params"]["N"] == 32);
  CHECK(doc["params"]["N_auto"] == false);
  CounterexampleParams cp;
  cp.p = 0.5;
  cp.N = 32;
  cp.n_cal = 8;
  cp.alpha = 0.35;
  CHECK(doc["analytic"]["closed_form_risk"].get<double>() ==
        closed_form_counterexample_risk(cp));
}

TEST_CASE("cli evaluate prints exactly what it writes to report.json") {
  TempDir dir;
  const std::string input = dir.file("data.json");
  save_loss_table(input, miscoverage_dataset(60, 8).table);
  const std::string out_dir = (dir.path / "out").string();

  const CliResult r =
      cli({"evaluate", "--input", input, "--n-cal", "30", "--trials", "20",
           "--alpha", "0.2", "--seed", "7", "--out", out_dir});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(out_dir + "/report.json"));
  CHECK(fs::exists(out_dir + "/risk_hist.csv"));
  CHECK(fs::exists(out_dir + "/trials.csv"));
  CHECK(r.out == slurp(out_dir + "/report.json"));

  const json doc = json::parse(r.out);
  CHECK(doc["n_total"] == 60);
  CHECK(doc["trials"] == 20);
}

TEST_CASE("cli verify rejects out-of-range criteria") {
  const CliResult r = cli({"verify", "--criterion", "11"});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"] == "config");
}
