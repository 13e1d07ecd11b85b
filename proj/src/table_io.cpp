#include "riskcal/table_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

namespace riskcal {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string compose_parse_message(const std::string& message,
                                  std::optional<std::size_t> line,
                                  const std::string& path) {
  std::string out;
  if (!path.empty()) out += path + ":";
  if (line) out += std::to_string(*line) + ":";
  if (!out.empty()) out += " ";
  return out + message;
}

std::string lowercase_extension(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t sep = path.find_last_of("/\\");
  if (dot == std::string::npos || (sep != std::string::npos && dot < sep)) {
    return "";
  }
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return ext;
}

std::string_view trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trimmed(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

double parse_double_field(std::string_view field, std::size_t line,
                          const std::string& path) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw ParseError("expected a number, got '" + std::string(field) + "'",
                     line, path);
  }
  return value;
}

struct CsvDoc {
  std::vector<double> grid;
  std::vector<std::vector<double>> loss_rows;
  std::vector<std::size_t> loss_lines;   // source line of each loss row
  std::vector<std::vector<double>> size_rows;
};

CsvDoc parse_csv(std::istream& in, const std::string& path) {
  CsvDoc doc;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool sizes_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (line_no == 1 && raw.size() >= 3 && raw[0] == '\xEF' &&
        raw[1] == '\xBB' && raw[2] == '\xBF') {
      raw.erase(0, 3);  // UTF-8 byte-order mark
    }
    if (trimmed(raw).empty()) continue;
    const std::vector<std::string_view> fields = split_fields(raw);
    const std::string_view tag = fields.front();

    if (!header_seen) {
      if (tag != "lambda") {
        throw ParseError("first row must be the 'lambda,<grid...>' header",
                         line_no, path);
      }
      doc.grid.reserve(fields.size() - 1);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const double g = parse_double_field(fields[i], line_no, path);
        if (!std::isfinite(g)) {
          throw ParseError("grid threshold must be finite", line_no, path);
        }
        if (!doc.grid.empty() && !(g > doc.grid.back())) {
          throw ParseError("grid must be strictly ascending", line_no, path);
        }
        doc.grid.push_back(g);
      }
      header_seen = true;
      continue;
    }

    const std::size_t want = doc.grid.size() + 2;  // tag + m + 1 values
    if (tag == "loss" || tag == "size") {
      if (fields.size() != want) {
        throw ParseError("row has " + std::to_string(fields.size() - 1) +
                             " values; the " + std::to_string(doc.grid.size()) +
                             "-point grid needs " +
                             std::to_string(doc.grid.size() + 1) +
                             " (one below the grid plus one per threshold)",
                         line_no, path);
      }
      std::vector<double> values;
      values.reserve(fields.size() - 1);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const double v = parse_double_field(fields[i], line_no, path);
        if (!std::isfinite(v)) {
          throw ParseError("values must be finite", line_no, path);
        }
        values.push_back(v);
      }
      if (tag == "loss") {
        if (sizes_seen && doc.size_rows.size() != doc.loss_rows.size()) {
          throw ParseError(
              "once any 'size' row appears, every loss row needs one", line_no,
              path);
        }
        doc.loss_rows.push_back(std::move(values));
        doc.loss_lines.push_back(line_no);
      } else {
        if (doc.size_rows.size() + 1 != doc.loss_rows.size()) {
          throw ParseError(
              "'size' row must directly follow its 'loss' row", line_no, path);
        }
        doc.size_rows.push_back(std::move(values));
        sizes_seen = true;
      }
      continue;
    }
    throw ParseError("unknown row tag '" + std::string(tag) +
                         "' (expected 'loss' or 'size')",
                     line_no, path);
  }
  if (!header_seen) {
    throw ParseError("empty file: expected a 'lambda' header", std::nullopt,
                     path);
  }
  if (doc.loss_rows.empty()) {
    throw ParseError("no 'loss' rows", std::nullopt, path);
  }
  if (sizes_seen && doc.size_rows.size() != doc.loss_rows.size()) {
    throw ParseError("once any 'size' row appears, every loss row needs one",
                     std::nullopt, path);
  }
  return doc;
}

ParsedTable csv_to_table(const CsvDoc& doc, std::optional<double> bound,
                         const std::string& path) {
  if (!bound) {
    throw ParseError(
        "CSV carries no loss bound; pass one explicitly (--B on the command "
        "line)",
        std::nullopt, path);
  }
  for (std::size_t r = 0; r < doc.loss_rows.size(); ++r) {
    for (const double v : doc.loss_rows[r]) {
      if (v > *bound) {
        throw ParseError("loss value " + detail::format_double(v) +
                             " exceeds the bound " +
                             detail::format_double(*bound),
                         doc.loss_lines[r], path);
      }
    }
  }
  std::vector<StepLoss> rows;
  rows.reserve(doc.loss_rows.size());
  for (const std::vector<double>& values : doc.loss_rows) {
    StepLoss row;
    row.breakpoints = doc.grid;
    row.values = values;
    rows.push_back(std::move(row));
  }
  ParsedTable out;
  out.table = LossTable::assemble(std::move(rows), *bound);
  out.sizes.reserve(doc.size_rows.size());
  for (const std::vector<double>& values : doc.size_rows) {
    StepLoss row;
    row.breakpoints = doc.grid;
    row.values = values;
    row.validate();
    out.sizes.push_back(row.canonical());
  }
  return out;
}

std::vector<double> json_number_array(const json& node, const char* what,
                                      const std::string& path) {
  if (!node.is_array()) {
    throw ParseError(std::string(what) + " must be an array of numbers",
                     std::nullopt, path);
  }
  std::vector<double> out;
  out.reserve(node.size());
  for (const json& v : node) {
    if (!v.is_number()) {
      throw ParseError(std::string(what) + " must contain only numbers",
                       std::nullopt, path);
    }
    out.push_back(v.get<double>());
  }
  return out;
}

StepLoss json_step_loss(const json& node, const char* what,
                        const std::vector<double>* shared_grid,
                        const std::string& path) {
  StepLoss row;
  if (shared_grid) {
    row.breakpoints = *shared_grid;
    row.values = json_number_array(node, what, path);
    if (row.values.size() != shared_grid->size() + 1) {
      throw ParseError(std::string(what) + " needs " +
                           std::to_string(shared_grid->size() + 1) +
                           " values on this grid, got " +
                           std::to_string(row.values.size()),
                       std::nullopt, path);
    }
    return row;
  }
  if (!node.is_object() || !node.contains("breakpoints") ||
      !node.contains("values")) {
    throw ParseError(std::string(what) +
                         " must be an object with 'breakpoints' and 'values'",
                     std::nullopt, path);
  }
  row.breakpoints = json_number_array(node["breakpoints"], what, path);
  row.values = json_number_array(node["values"], what, path);
  if (node.contains("domain_min")) {
    if (!node["domain_min"].is_number()) {
      throw ParseError("domain_min must be a number", std::nullopt, path);
    }
    row.domain_min = node["domain_min"].get<double>();
  }
  return row;
}

ParsedTable parse_json(std::istream& in, std::optional<double> bound_override,
                       const std::string& path) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(e.what(), std::nullopt, path);
  }
  if (!doc.is_object()) {
    throw ParseError("top level must be a JSON object", std::nullopt, path);
  }
  std::optional<double> bound = bound_override;
  if (!bound) {
    if (!doc.contains("B") || !doc["B"].is_number()) {
      throw ParseError("missing numeric 'B' (the loss bound)", std::nullopt,
                       path);
    }
    bound = doc["B"].get<double>();
  }
  if (!doc.contains("rows")) {
    throw ParseError("missing 'rows'", std::nullopt, path);
  }
  const json& rows_node = doc["rows"];
  if (!rows_node.is_array() || rows_node.empty()) {
    throw ParseError("'rows' must be a nonempty array", std::nullopt, path);
  }

  std::vector<double> grid;
  const bool shared = doc.contains("lambdas");
  if (shared) {
    grid = json_number_array(doc["lambdas"], "'lambdas'", path);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(grid[i]) || (i > 0 && !(grid[i] > grid[i - 1]))) {
        throw ParseError("'lambdas' must be finite and strictly ascending",
                         std::nullopt, path);
      }
    }
  }
  const std::vector<double>* shared_grid = shared ? &grid : nullptr;

  std::vector<StepLoss> rows;
  rows.reserve(rows_node.size());
  for (const json& r : rows_node) {
    rows.push_back(json_step_loss(r, "loss row", shared_grid, path));
  }
  for (const StepLoss& r : rows) {
    for (const double v : r.values) {
      if (v > *bound) {
        throw ParseError("loss value " + detail::format_double(v) +
                             " exceeds the bound " +
                             detail::format_double(*bound),
                         std::nullopt, path);
      }
    }
  }

  ParsedTable out;
  out.table = LossTable::assemble(std::move(rows), *bound);
  if (doc.contains("sizes")) {
    const json& sizes_node = doc["sizes"];
    if (!sizes_node.is_array() || sizes_node.size() != out.table.size()) {
      throw ParseError("'sizes' must be an array with one entry per row",
                       std::nullopt, path);
    }
    out.sizes.reserve(sizes_node.size());
    for (const json& s : sizes_node) {
      StepLoss row = json_step_loss(s, "size row", shared_grid, path);
      row.validate();
      out.sizes.push_back(row.canonical());
    }
  }
  return out;
}

TableFormat detect_format(const std::string& path, std::istream* content) {
  const std::string ext = lowercase_extension(path);
  if (ext == "csv") return TableFormat::csv;
  if (ext == "json") return TableFormat::json;
  if (content) {
    // Sniff: a JSON document opens with '{' (skip whitespace and a BOM).
    char c = 0;
    while (content->get(c)) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == '\xEF' || c == '\xBB' || c == '\xBF') continue;
      break;
    }
    content->clear();
    content->seekg(0);
    return c == '{' ? TableFormat::json : TableFormat::csv;
  }
  return TableFormat::json;
}

void append_step_values_on_grid(std::string& line, const StepLoss& row,
                                const std::vector<double>& grid) {
  line += ',';
  line += detail::format_double(row.values.front());  // below the grid
  for (const double g : grid) {
    line += ',';
    line += detail::format_double(row.eval(g));
  }
}

void save_csv(std::ostream& out, const LossTable& table,
              const std::vector<StepLoss>& sizes) {
  for (const StepLoss& row : table.rows) {
    if (row.domain_min != kNegInf) {
      throw std::invalid_argument(
          "save_loss_table: CSV cannot express a finite domain_min; save as "
          "JSON instead");
    }
  }
  // The shared grid must cover the size curves' breakpoints too.
  std::vector<double> grid = merged_breakpoints(table);
  for (const StepLoss& s : sizes) {
    grid.insert(grid.end(), s.breakpoints.begin(), s.breakpoints.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::string line = "lambda";
  for (const double g : grid) {
    line += ',';
    line += detail::format_double(g);
  }
  out << line << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    line = "loss";
    append_step_values_on_grid(line, table.rows[i], grid);
    out << line << '\n';
    if (!sizes.empty()) {
      line = "size";
      append_step_values_on_grid(line, sizes[i], grid);
      out << line << '\n';
    }
  }
}

ordered_json step_loss_to_json(const StepLoss& row) {
  ordered_json j;
  j["breakpoints"] = row.breakpoints;
  j["values"] = row.values;
  if (row.domain_min != kNegInf) j["domain_min"] = row.domain_min;
  return j;
}

void save_json(std::ostream& out, const LossTable& table,
               const std::vector<StepLoss>& sizes) {
  ordered_json doc;
  doc["B"] = table.bound;
  doc["rows"] = ordered_json::array();
  for (const StepLoss& row : table.rows) {
    doc["rows"].push_back(step_loss_to_json(row));
  }
  if (!sizes.empty()) {
    doc["sizes"] = ordered_json::array();
    for (const StepLoss& s : sizes) doc["sizes"].push_back(step_loss_to_json(s));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace

ParseError::ParseError(const std::string& message,
                       std::optional<std::size_t> line, const std::string& path)
    : std::runtime_error(compose_parse_message(message, line, path)),
      path_(path),
      line_(line) {}

ParsedTable load_loss_table(const std::string& path,
                            std::optional<double> bound_override,
                            TableFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file", std::nullopt, path);
  }
  if (format == TableFormat::autodetect) format = detect_format(path, &in);
  if (format == TableFormat::json) return parse_json(in, bound_override, path);
  const CsvDoc doc = parse_csv(in, path);
  return csv_to_table(doc, bound_override, path);
}

void save_loss_table(const std::string& path, const LossTable& table,
                     const std::vector<StepLoss>& sizes, TableFormat format) {
  if (!sizes.empty() && sizes.size() != table.size()) {
    throw std::invalid_argument(
        "save_loss_table: sizes must be empty or one per row");
  }
  if (format == TableFormat::autodetect) format = detect_format(path, nullptr);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot open file for writing", std::nullopt, path);
  }
  if (format == TableFormat::csv) {
    save_csv(out, table, sizes);
  } else {
    save_json(out, table, sizes);
  }
  out.flush();
  if (!out) {
    throw ParseError("write failed", std::nullopt, path);
  }
}

namespace detail {

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "0";  // unreachable for finite doubles
  return std::string(buf, ptr);
}

}  // namespace detail

}  // namespace riskcal
