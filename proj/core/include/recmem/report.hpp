#pragma once

// Tabular reports with byte-deterministic TSV and JSON rendering.
//
// TSV numbers use fixed formatting: metrics with 4 decimals and the leading
// zero dropped (".3793"), ratios with 2 decimals. Undefined cells render as
// "-" in TSV and null in JSON.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/ensemble.hpp"
#include "recmem/metrics.hpp"
#include "recmem/token_lens.hpp"

namespace recmem {

std::string format_metric(double v);
std::string format_ratio(double v);
std::string format_real(double v);

struct Cell {
  enum class Kind { kText, kInt, kMetric, kRatio, kReal, kMissing };
  Kind kind = Kind::kMissing;
  std::string text;
  std::int64_t integer = 0;
  double real = 0.0;

  static Cell text_of(std::string s) { return {Kind::kText, std::move(s), 0, 0.0}; }
  static Cell int_of(std::int64_t v) { return {Kind::kInt, {}, v, 0.0}; }
  static Cell metric(double v) { return {Kind::kMetric, {}, 0, v}; }
  static Cell ratio(double v) { return {Kind::kRatio, {}, 0, v}; }
  static Cell real_of(double v) { return {Kind::kReal, {}, 0, v}; }
  static Cell missing() { return {}; }
  static Cell metric(const std::optional<double>& v) { return v ? metric(*v) : missing(); }
  static Cell ratio(const std::optional<double>& v) { return v ? ratio(*v) : missing(); }

  std::string tsv() const;
};

/// Where a report came from: tool version, effective config and input hashes.
struct Provenance {
  std::string tool = "recmem";
  std::string version;
  std::vector<std::pair<std::string, std::string>> config;
  struct Input {
    std::string role;
    std::string path;
    std::string sha256;
  };
  std::vector<Input> inputs;

  static Provenance current();
  void add_config(std::string key, std::string value);
  /// Hashes the file at `path`; throws IoError if unreadable.
  void add_input(std::string role, const std::filesystem::path& path);
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// Named numeric arrays carried into JSON (e.g. bin edges).
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  void add_row(std::vector<Cell> row);
};

enum class ReportFormat { kTsv, kJson };
ReportFormat parse_report_format(std::string_view s);
/// Format implied by a file extension (".json" or anything else for TSV).
ReportFormat format_for_path(const std::filesystem::path& path);

/// TSV: '#' provenance lines (when `prov` is given), header, rows.
void write_tsv(std::ostream& out, const Table& table, const Provenance* prov = nullptr);
/// JSON: {"provenance", "table", "columns", "rows" (objects), arrays...}.
void write_json(std::ostream& out, const Table& table, const Provenance* prov = nullptr);
/// Several tables in one JSON document keyed by table name.
void write_json(std::ostream& out, const std::vector<Table>& tables, const Provenance* prov = nullptr);
/// Writes one or more tables; TSV separates tables with a blank line.
/// Throws IoError if the path cannot be written.
void write_report(const std::filesystem::path& path, const std::vector<Table>& tables,
                  ReportFormat format, const Provenance* prov = nullptr);

// Builders for the toolkit's reports.
Table ratio_table(const RatioSummary& s, int max_hop);
Table breakdown_table(const BreakdownReport& r);
Table binned_table(const BinnedReport& r);
Table grid_table(const GridReport& g);
Table token_bucket_table(const TokenBuckets& b);
Table category_reduction_table(const CategoryReduction& r);
Table tune_grid_table(const TuneResult& r);

}  // namespace recmem
