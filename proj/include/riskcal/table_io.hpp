#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "riskcal/step_loss.hpp"

// Loss-table file ingestion and emission.
//
// Two formats:
//
//   CSV (shared grid) — the interchange format for losses precomputed on a
//   threshold grid by an external pipeline:
//
//       lambda,<g_1>,...,<g_m>          strictly ascending grid
//       loss,<v_0>,<v_1>,...,<v_m>      v_0 below the grid, v_j on [g_j, g_{j+1})
//       size,<s_0>,<s_1>,...,<s_m>      optional, attaches to the loss row above
//
//   CSV carries no loss bound, so loading it requires an explicit bound.
//
//   JSON — either the same shared-grid shape ({"B": ..., "lambdas": [...],
//   "rows": [[...], ...], "sizes": [[...], ...]?}) or exact per-row curves
//   ({"B": ..., "rows": [{"breakpoints": [...], "values": [...],
//   "domain_min"?: ...}, ...], "sizes"?: [...]}). JSON carries B; a caller
//   override wins.
//
// save followed by load reproduces canonical tables exactly: JSON stores the
// curves verbatim, and CSV stores values on the merged breakpoint grid with
// shortest-round-trip number formatting.

namespace riskcal {

// Malformed input file. what() carries "path:line: message" when the line is
// known (CSV), "path: message" otherwise.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message,
             std::optional<std::size_t> line = std::nullopt,
             const std::string& path = "");

  const std::string& path() const noexcept { return path_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::string path_;
  std::optional<std::size_t> line_;
};

enum class TableFormat { autodetect, csv, json };

// A loaded table plus the optional per-row prediction-set-size curves (set
// size as a step function of the threshold; not derivable from losses).
// sizes is empty or has exactly one entry per table row.
struct ParsedTable {
  LossTable table;
  std::vector<StepLoss> sizes;
};

// Loads a table. autodetect picks the format from the file extension, then
// from the leading character ('{' means JSON). CSV requires bound_override;
// for JSON an override replaces the file's B. Throws ParseError on malformed
// input (with a line number for CSV) and std::invalid_argument if the parsed
// rows violate table invariants.
ParsedTable load_loss_table(const std::string& path,
                            std::optional<double> bound_override = std::nullopt,
                            TableFormat format = TableFormat::autodetect);

// Saves a table (and optional size curves, one per row). autodetect picks
// JSON unless the extension says .csv. CSV cannot express a finite
// domain_min; saving such a table as CSV throws std::invalid_argument.
void save_loss_table(const std::string& path, const LossTable& table,
                     const std::vector<StepLoss>& sizes = {},
                     TableFormat format = TableFormat::autodetect);

namespace detail {

// Shortest decimal string that parses back to exactly this double.
std::string format_double(double value);

}  // namespace detail

}  // namespace riskcal
