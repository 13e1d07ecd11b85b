#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Command-line surface. run_cli is the whole program behind the `riskcal`
// binary, factored so tests (and the determinism checks) can invoke it
// in-process with captured streams.
//
// Subcommands:
//   calibrate  --input F --alpha A [--B B] [--monotonize] [--correction]
//   quantile   --scores F --alpha A
//   evaluate   --input F --n-cal N --trials T --alpha A --seed S --out DIR
//              [--B B] [--threads K] [--monotonize] [--correction]
//   simulate   --scenario {tightness|counterexample|miscoverage|near-monotone}
//              --n N --trials T --seed S [scenario params] [--calibrator C]
//              [--threads K]
//   verify     [--criterion K] [--seed S]
//
// Results are JSON on stdout. Exit codes: 0 success, 1 infeasibility (or any
// failed verify criterion), 2 parse/config errors; errors are a single JSON
// object on stderr.

namespace riskcal {

// args are the arguments after the program name. Writes results to `out`,
// error JSON to `err`; never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace riskcal
