#include "icpsim/report.hpp"

#include <cstdio>
#include <sstream>

#include "icpsim/errors.hpp"
#include "json.hpp"

namespace icpsim {

using ojson = nlohmann::ordered_json;

void Report::add_row(std::vector<Cell> row) {
  require(row.size() == columns.size(), "row width does not match the columns");
  rows.push_back(std::move(row));
}

namespace {

ojson cell_json(const Cell& c) {
  return std::visit([](const auto& x) { return ojson(x); }, c);
}

Cell json_cell(const ojson& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw IoError("unsupported JSON value in report");
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  return std::get<std::string>(c);
}

std::string to_json(const Report& r) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = r.command;
  j["config"] = ojson::object();
  for (const auto& [k, v] : r.config) j["config"][k] = v;
  j["summary"] = ojson::object();
  for (const auto& [k, v] : r.summary) j["summary"][k] = cell_json(v);
  j["columns"] = r.columns;
  j["rows"] = ojson::array();
  for (const auto& row : r.rows) {
    ojson a = ojson::array();
    for (const auto& c : row) a.push_back(cell_json(c));
    j["rows"].push_back(std::move(a));
  }
  return j.dump();
}

Report parse_json(const std::string& text) {
  try {
    const ojson j = ojson::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw IoError("unsupported schema version");
    Report r;
    r.command = j.at("command").get<std::string>();
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    for (const auto& [k, v] : j.at("summary").items()) r.summary.emplace_back(k, json_cell(v));
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      std::vector<Cell> cells;
      for (const auto& c : row) cells.push_back(json_cell(c));
      r.rows.push_back(std::move(cells));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
}

std::string to_csv(const Report& r) {
  std::ostringstream os;
  os << "# schema_version=" << kSchemaVersion << "\n";
  os << "# command=" << r.command << "\n";
  for (const auto& [k, v] : r.config) os << "# config " << k << "=" << v << "\n";
  for (const auto& [k, v] : r.summary) os << "# summary " << k << "=" << format_cell(v) << "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << csv_quote(r.columns[i]);
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_quote(format_cell(row[i]));
    os << "\n";
  }
  return os.str();
}

std::string estimate_json(const Estimate& e) {
  ojson j;
  j["mean"] = e.mean;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  j["replicas"] = e.replicas;
  j["excluded"] = e.excluded;
  j["seed"] = e.seed;
  return j.dump();
}

Estimate estimate_from_json(const std::string& text) {
  try {
    const ojson j = ojson::parse(text);
    Estimate e;
    e.mean = j.at("mean").get<double>();
    e.ci_low = j.at("ci_low").get<double>();
    e.ci_high = j.at("ci_high").get<double>();
    e.replicas = j.at("replicas").get<std::uint64_t>();
    e.excluded = j.at("excluded").get<std::uint64_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    return e;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed estimate: ") + e.what());
  }
}

void add_estimate(Report& r, const std::string& name, const Estimate& e) {
  r.summary.emplace_back(name + ".mean", e.mean);
  r.summary.emplace_back(name + ".ci_low", e.ci_low);
  r.summary.emplace_back(name + ".ci_high", e.ci_high);
  r.summary.emplace_back(name + ".replicas", static_cast<std::int64_t>(e.replicas));
  r.summary.emplace_back(name + ".excluded", static_cast<std::int64_t>(e.excluded));
  r.summary.emplace_back(name + ".seed", std::to_string(e.seed));
}

}  // namespace icpsim
