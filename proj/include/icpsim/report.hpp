#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "icpsim/stats.hpp"

namespace icpsim {

constexpr int kSchemaVersion = 1;

using Cell = std::variant<std::int64_t, double, std::string, bool>;

// Machine-readable output of one command: the resolved configuration, a few
// summary values and a table.
struct Report {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, Cell>> summary;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  bool operator==(const Report&) const = default;
};

std::string to_json(const Report& r);
Report parse_json(const std::string& text);

// Comment lines carry the schema version, config and summary; then a header
// row and one line per row. Doubles use 17 significant digits.
std::string to_csv(const Report& r);

std::string format_cell(const Cell& c);

// The six Estimate fields in fixed order.
std::string estimate_json(const Estimate& e);
Estimate estimate_from_json(const std::string& text);

// Appends an estimate as summary entries prefixed with `name.`.
void add_estimate(Report& r, const std::string& name, const Estimate& e);

}  // namespace icpsim
