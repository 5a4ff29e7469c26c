#include "recmem/report.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"
#include "recmem/error.hpp"

#ifndef RECMEM_VERSION
#define RECMEM_VERSION "0.0.0"
#endif

namespace recmem {

namespace {

using Json = nlohmann::ordered_json;

// Drops the integer zero of |v| < 1 ("0.3793" -> ".3793", "-0.5000" -> "-.5000").
std::string drop_leading_zero(std::string s) {
  if (s.rfind("0.", 0) == 0) return s.substr(1);
  if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
  return s;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read '{}'", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("SHA-256 unavailable");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(got));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

Json cell_json(const Cell& c) {
  switch (c.kind) {
    case Cell::Kind::kText:
      return c.text;
    case Cell::Kind::kInt:
      return c.integer;
    case Cell::Kind::kMetric:
    case Cell::Kind::kRatio:
    case Cell::Kind::kReal:
      return c.real;
    case Cell::Kind::kMissing:
      return nullptr;
  }
  return nullptr;
}

Json provenance_json(const Provenance& p) {
  Json j;
  j["tool"] = p.tool;
  j["version"] = p.version;
  Json cfg = Json::object();
  for (const auto& [k, v] : p.config) cfg[k] = v;
  j["config"] = cfg;
  Json inputs = Json::array();
  for (const auto& in : p.inputs) {
    inputs.push_back(Json{{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  j["inputs"] = inputs;
  return j;
}

Json table_json(const Table& t) {
  Json j;
  j["table"] = t.name;
  j["columns"] = t.columns;
  for (const auto& [name, values] : t.arrays) j[name] = values;
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::object();
    for (std::size_t c = 0; c < t.columns.size(); ++c) r[t.columns[c]] = cell_json(row[c]);
    rows.push_back(std::move(r));
  }
  j["rows"] = rows;
  return j;
}

void write_provenance_tsv(std::ostream& out, const Provenance& p) {
  out << "# tool\t" << p.tool << ' ' << p.version << '\n';
  for (const auto& [k, v] : p.config) out << "# config\t" << k << '=' << v << '\n';
  for (const auto& in : p.inputs) {
    out << "# input\t" << in.role << '\t' << in.path << '\t' << in.sha256 << '\n';
  }
}

}  // namespace

std::string format_metric(double v) { return drop_leading_zero(fmt::format("{:.4f}", v)); }
std::string format_ratio(double v) { return fmt::format("{:.2f}", v); }
std::string format_real(double v) { return fmt::format("{:.6f}", v); }

std::string Cell::tsv() const {
  switch (kind) {
    case Kind::kText:
      return text;
    case Kind::kInt:
      return std::to_string(integer);
    case Kind::kMetric:
      return format_metric(real);
    case Kind::kRatio:
      return format_ratio(real);
    case Kind::kReal:
      return format_real(real);
    case Kind::kMissing:
      return "-";
  }
  return "-";
}

Provenance Provenance::current() {
  Provenance p;
  p.version = RECMEM_VERSION;
  return p;
}

void Provenance::add_config(std::string key, std::string value) {
  config.emplace_back(std::move(key), std::move(value));
}

void Provenance::add_input(std::string role, const std::filesystem::path& path) {
  inputs.push_back({std::move(role), path.string(), sha256_file(path)});
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw ValidationError(fmt::format("table '{}': row has {} cells for {} columns", name,
                                      row.size(), columns.size()));
  }
  rows.push_back(std::move(row));
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "tsv") return ReportFormat::kTsv;
  if (s == "json") return ReportFormat::kJson;
  throw ValidationError(fmt::format("unknown report format '{}' (expected tsv|json)", s));
}

ReportFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? ReportFormat::kJson : ReportFormat::kTsv;
}

void write_tsv(std::ostream& out, const Table& table, const Provenance* prov) {
  if (prov != nullptr) write_provenance_tsv(out, *prov);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "\t" : "") << table.columns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "\t" : "") << row[c].tsv();
    out << '\n';
  }
}

void write_json(std::ostream& out, const Table& table, const Provenance* prov) {
  Json j;
  if (prov != nullptr) j["provenance"] = provenance_json(*prov);
  const Json body = table_json(table);
  for (const auto& [k, v] : body.items()) j[k] = v;
  out << j.dump(2) << '\n';
}

void write_json(std::ostream& out, const std::vector<Table>& tables, const Provenance* prov) {
  if (tables.size() == 1) {
    write_json(out, tables.front(), prov);
    return;
  }
  Json j;
  if (prov != nullptr) j["provenance"] = provenance_json(*prov);
  Json ts = Json::object();
  for (const auto& t : tables) ts[t.name] = table_json(t);
  j["tables"] = ts;
  out << j.dump(2) << '\n';
}

void write_report(const std::filesystem::path& path, const std::vector<Table>& tables,
                  ReportFormat format, const Provenance* prov) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  if (format == ReportFormat::kJson) {
    write_json(out, tables, prov);
  } else {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (i > 0) out << '\n';
      write_tsv(out, tables[i], i == 0 ? prov : nullptr);
    }
  }
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

// ---------------------------------------------------------------- builders

Table ratio_table(const RatioSummary& s, int max_hop) {
  Table t{"ratio", {"category", "hop", "count", "ratio"}, {}, {}};
  auto row = [&](std::string cat, std::optional<int> hop, std::size_t count) {
    t.add_row({Cell::text_of(std::move(cat)), hop ? Cell::int_of(*hop) : Cell::missing(),
               Cell::int_of(static_cast<std::int64_t>(count)), Cell::ratio(s.percent(count))});
  };
  row("memorization", std::nullopt, s.memorization);
  row("generalization", std::nullopt, s.generalization);
  auto per_hop = [&](const char* name, const std::vector<std::size_t>& cells, int first) {
    for (int h = first; h <= max_hop && h <= static_cast<int>(cells.size()); ++h) {
      row(name, h, cells[static_cast<std::size_t>(h - 1)]);
    }
  };
  per_hop("substitutability", s.substitutability, 2);
  per_hop("symmetry", s.symmetry, 1);
  per_hop("transitivity", s.transitivity, 1);
  per_hop("second_symmetry", s.second_symmetry, 1);
  for (std::size_t k = 0; k < s.second_symmetry_kind.size(); ++k) {
    row(fmt::format("second_symmetry:{}", to_string(static_cast<SecondSymmetryKind>(k))),
        std::nullopt, s.second_symmetry_kind[k]);
  }
  row("uncategorized", std::nullopt, s.uncategorized);
  row("total", std::nullopt, s.total);
  return t;
}

Table breakdown_table(const BreakdownReport& r) {
  Table t{"breakdown", {"cell", "count", "ratio"}, {}, {}};
  for (const auto& m : r.models) {
    t.columns.push_back(fmt::format("{} N@{}", m, r.k));
    t.columns.push_back(fmt::format("{} R@{}", m, r.k));
  }
  if (r.total == 0) return t;
  for (const auto& cell : r.cells) {
    std::vector<Cell> row{Cell::text_of(cell.label()),
                          Cell::int_of(static_cast<std::int64_t>(cell.count)),
                          Cell::ratio(cell.ratio)};
    for (std::size_t m = 0; m < r.models.size(); ++m) {
      row.push_back(Cell::metric(cell.ndcg[m]));
      row.push_back(Cell::metric(cell.recall[m]));
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table binned_table(const BinnedReport& r) {
  Table t{"bins:" + r.key, {"bin", "lo", "hi", "count", "mem_ratio"}, {}, {}};
  for (const auto& m : r.models) t.columns.push_back(fmt::format("{} {}", m, r.metric));
  std::vector<double> edges;
  for (const auto& row : r.rows) {
    if (edges.empty()) edges.push_back(row.lo);
    edges.push_back(row.hi);
    std::vector<Cell> cells{Cell::int_of(static_cast<std::int64_t>(row.bin)), Cell::real_of(row.lo),
                            Cell::real_of(row.hi), Cell::int_of(static_cast<std::int64_t>(row.count)),
                            Cell::ratio(row.mem_ratio)};
    for (const auto& v : row.mean) cells.push_back(Cell::metric(v));
    t.add_row(std::move(cells));
  }
  t.arrays.emplace_back("edges", std::move(edges));
  return t;
}

Table grid_table(const GridReport& g) {
  Table t{fmt::format("grid:{}-{}", g.x_key, g.y_key),
          {"x_bin", "y_bin", "x_lo", "x_hi", "y_lo", "y_hi", "count",
           fmt::format("delta({}-{})", g.model_a, g.model_b)},
          {},
          {}};
  for (std::size_t x = 0; x < g.bins; ++x) {
    for (std::size_t y = 0; y < g.bins; ++y) {
      const std::size_t c = x * g.bins + y;
      t.add_row({Cell::int_of(static_cast<std::int64_t>(x)), Cell::int_of(static_cast<std::int64_t>(y)),
                 Cell::real_of(g.x_edges[x]), Cell::real_of(g.x_edges[x + 1]),
                 Cell::real_of(g.y_edges[y]), Cell::real_of(g.y_edges[y + 1]),
                 Cell::int_of(static_cast<std::int64_t>(g.counts[c])), Cell::metric(g.mean_delta[c])});
    }
  }
  t.arrays.emplace_back("x_edges", g.x_edges);
  t.arrays.emplace_back("y_edges", g.y_edges);
  return t;
}

Table token_bucket_table(const TokenBuckets& b) {
  Table t{"token_memorization", {"n", "count", "ratio"}, {}, {}};
  for (std::size_t n = b.max_n + 1; n-- > 0;) {
    t.add_row({Cell::int_of(static_cast<std::int64_t>(n)),
               Cell::int_of(static_cast<std::int64_t>(b.counts[n])), Cell::ratio(b.percent(n))});
  }
  return t;
}

Table category_reduction_table(const CategoryReduction& r) {
  Table t{"category_reduction", {"category", "count"}, {}, {}};
  for (std::size_t n = r.max_n + 1; n-- > 0;) t.columns.push_back(fmt::format("n={}", n));
  for (std::size_t c = 0; c < r.categories.size(); ++c) {
    std::vector<Cell> row{Cell::text_of(r.categories[c]),
                          Cell::int_of(static_cast<std::int64_t>(r.totals[c]))};
    for (std::size_t n = r.max_n + 1; n-- > 0;) {
      if (r.totals[c] == 0) {
        row.push_back(Cell::missing());
      } else {
        row.push_back(Cell::ratio(100.0 * static_cast<double>(r.counts[c][n]) /
                                  static_cast<double>(r.totals[c])));
      }
    }
    t.add_row(std::move(row));
  }
  return t;
}

Table tune_grid_table(const TuneResult& r) {
  Table t{"tune_grid", {"mode", "normalization", "q", "tau", "alpha_static", "val_ndcg"}, {}, {}};
  for (const auto* pts : {&r.adaptive, &r.fixed}) {
    for (const auto& p : *pts) {
      const bool adaptive = p.config.mode == FusionMode::kAdaptive;
      t.add_row({Cell::text_of(std::string(to_string(p.config.mode))),
                 Cell::text_of(std::string(to_string(p.config.normalization))),
                 adaptive ? Cell::real_of(p.config.q) : Cell::missing(),
                 adaptive ? Cell::real_of(p.config.tau) : Cell::missing(),
                 adaptive ? Cell::missing() : Cell::real_of(p.config.alpha_static),
                 Cell::metric(p.ndcg)});
    }
  }
  return t;
}

}  // namespace recmem
