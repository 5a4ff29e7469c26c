#include "recmem/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "recmem/error.hpp"

namespace recmem {

void PredictionList::validate() const {
  std::unordered_set<ItemId> seen;
  double sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& r = ranked[i];
    if (!std::isfinite(r.score)) throw ValidationError("non-finite score");
    if (i > 0 && r.score > ranked[i - 1].score) {
      throw ValidationError(fmt::format("non-monotone scores at position {}", i + 1));
    }
    if (!seen.insert(r.item).second) {
      throw ValidationError(fmt::format("duplicate item at position {}", i + 1));
    }
    if (is_probability && (r.score < 0.0 || r.score > 1.0)) {
      throw ValidationError(fmt::format("probability score {} outside [0, 1]", r.score));
    }
    sum += r.score;
  }
  if (is_probability && sum > 1.0 + kProbabilitySlack) {
    throw ValidationError(fmt::format("not a sub-distribution (scores sum to {})", sum));
  }
}

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

void canonicalize(PredictionList& list) {
  std::sort(list.ranked.begin(), list.ranked.end(), ranks_before);
}

std::optional<std::size_t> rank_of(const PredictionList& pred, ItemId target) {
  auto it = std::find_if(pred.ranked.begin(), pred.ranked.end(),
                         [&](const ScoredItem& s) { return s.item == target; });
  if (it == pred.ranked.end()) return std::nullopt;
  const ScoredItem t = *it;
  std::size_t ahead = 0;
  for (const auto& s : pred.ranked) {
    if (ranks_before(s, t)) ++ahead;
  }
  return ahead + 1;
}

double ndcg_at_k(const PredictionList& pred, ItemId target, std::size_t k) {
  if (k == 0) throw ValidationError("k must be >= 1");
  const auto r = rank_of(pred, target);
  if (!r || *r > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*r) + 1.0);
}

double recall_at_k(const PredictionList& pred, ItemId target, std::size_t k) {
  if (k == 0) throw ValidationError("k must be >= 1");
  const auto r = rank_of(pred, target);
  return r && *r <= k ? 1.0 : 0.0;
}

ModelScores score_model(std::string name, std::span<const PredictionList> preds,
                        std::span<const ItemId> targets, std::size_t k) {
  if (preds.size() != targets.size()) {
    throw ValidationError(fmt::format("model '{}': {} prediction lists for {} instances", name,
                                      preds.size(), targets.size()));
  }
  ModelScores m{std::move(name), {}, {}};
  m.ndcg.reserve(preds.size());
  m.recall.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    m.ndcg.push_back(ndcg_at_k(preds[i], targets[i], k));
    m.recall.push_back(recall_at_k(preds[i], targets[i], k));
  }
  return m;
}

// ---------------------------------------------------------------- breakdown

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::kMemorization:
      return "memorization";
    case CellKind::kGeneralization:
      return "generalization";
    case CellKind::kSubstitutability:
      return "substitutability";
    case CellKind::kSymmetry:
      return "symmetry";
    case CellKind::kTransitivity:
      return "transitivity";
    case CellKind::kSecondSymmetry:
      return "second_symmetry";
    case CellKind::kUncategorized:
      return "uncategorized";
  }
  return "?";
}

std::string BreakdownCell::label() const {
  if (hop == 0) return std::string(to_string(kind));
  return fmt::format("{}@{}", to_string(kind), hop);
}

namespace {

struct Accumulator {
  std::size_t count = 0;
  std::vector<double> ndcg;
  std::vector<double> recall;
};

}  // namespace

BreakdownReport breakdown(std::span<const CategoryRecord> records, std::span<const ModelScores> models,
                          std::size_t k, int max_hop) {
  for (const auto& m : models) {
    if (m.ndcg.size() != records.size() || m.recall.size() != records.size()) {
      throw ValidationError(fmt::format("model '{}' has {} scores for {} labelled instances", m.name,
                                        m.ndcg.size(), records.size()));
    }
  }
  BreakdownReport rep;
  rep.k = k;
  rep.total = records.size();
  for (const auto& m : models) rep.models.push_back(m.name);

  std::vector<BreakdownCell> cells;
  auto add = [&](CellKind kind, int hop) { cells.push_back({kind, hop, 0, 0.0, {}, {}}); };
  add(CellKind::kMemorization, 0);
  add(CellKind::kGeneralization, 0);
  for (int h = 2; h <= max_hop; ++h) add(CellKind::kSubstitutability, h);
  for (int h = 1; h <= max_hop; ++h) add(CellKind::kSymmetry, h);
  for (int h = 1; h <= max_hop; ++h) add(CellKind::kTransitivity, h);
  for (int h = 1; h <= max_hop; ++h) add(CellKind::kSecondSymmetry, h);
  add(CellKind::kUncategorized, 0);

  auto find = [&](CellKind kind, int hop) -> std::size_t {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].kind == kind && cells[c].hop == hop) return c;
    }
    return cells.size();
  };

  std::vector<Accumulator> acc(cells.size(), {0, std::vector<double>(models.size(), 0.0),
                                              std::vector<double>(models.size(), 0.0)});
  auto credit = [&](std::size_t c, std::size_t i) {
    if (c >= cells.size()) return;
    ++acc[c].count;
    for (std::size_t m = 0; m < models.size(); ++m) {
      acc[c].ndcg[m] += models[m].ndcg[i];
      acc[c].recall[m] += models[m].recall[i];
    }
  };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.memorization) {
      credit(find(CellKind::kMemorization, 0), i);
      continue;
    }
    if (!r.generalization()) {
      credit(find(CellKind::kUncategorized, 0), i);
      continue;
    }
    credit(find(CellKind::kGeneralization, 0), i);
    if (r.substitutability_hop) credit(find(CellKind::kSubstitutability, *r.substitutability_hop), i);
    if (r.symmetry_hop) credit(find(CellKind::kSymmetry, *r.symmetry_hop), i);
    if (r.transitivity_hop) credit(find(CellKind::kTransitivity, *r.transitivity_hop), i);
    if (r.second_symmetry_hop) credit(find(CellKind::kSecondSymmetry, *r.second_symmetry_hop), i);
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    auto& cell = cells[c];
    cell.count = acc[c].count;
    cell.ratio = rep.total == 0 ? 0.0
                                : 100.0 * static_cast<double>(cell.count) / static_cast<double>(rep.total);
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (cell.count == 0) {
        cell.ndcg.emplace_back();
        cell.recall.emplace_back();
      } else {
        const auto n = static_cast<double>(cell.count);
        cell.ndcg.emplace_back(acc[c].ndcg[m] / n);
        cell.recall.emplace_back(acc[c].recall[m] / n);
      }
    }
  }
  rep.cells = std::move(cells);
  return rep;
}

// ---------------------------------------------------------------- quantile bins

QuantileBins quantile_bins(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw ValidationError("number of bins must be >= 1");
  if (values.empty()) throw ValidationError("cannot bin an empty value list");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("cannot bin non-finite values");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  QuantileBins q;
  q.bins = bins;
  q.edges.push_back(sorted.front());
  for (std::size_t i = 1; i < bins; ++i) {
    // smallest index j with (j + 1) / n >= i / B
    const std::size_t j = (i * n + bins - 1) / bins - 1;
    q.edges.push_back(sorted[j]);
  }
  q.edges.push_back(sorted.back());

  const auto inner_begin = q.edges.begin() + 1;
  const auto inner_end = q.edges.end() - 1;
  q.assign.reserve(n);
  for (double v : values) {
    q.assign.push_back(static_cast<std::size_t>(std::lower_bound(inner_begin, inner_end, v) - inner_begin));
  }
  return q;
}

BinnedReport binned_report(std::string key, std::span<const double> keys, std::string metric,
                           std::span<const std::string> model_names,
                           std::span<const std::vector<double>> metric_rows,
                           std::span<const std::uint8_t> memorization, std::size_t bins) {
  if (model_names.size() != metric_rows.size()) {
    throw ValidationError("binned report: model names and metric rows differ in length");
  }
  for (const auto& row : metric_rows) {
    if (row.size() != keys.size()) throw ValidationError("binned report: metric row misaligned with keys");
  }
  if (!memorization.empty() && memorization.size() != keys.size()) {
    throw ValidationError("binned report: memorization flags misaligned with keys");
  }
  const QuantileBins q = quantile_bins(keys, bins);

  BinnedReport rep;
  rep.key = std::move(key);
  rep.metric = std::move(metric);
  rep.models.assign(model_names.begin(), model_names.end());
  std::vector<std::size_t> counts(bins, 0);
  std::vector<std::size_t> mem(bins, 0);
  std::vector<std::vector<double>> sums(bins, std::vector<double>(metric_rows.size(), 0.0));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t b = q.assign[i];
    ++counts[b];
    if (!memorization.empty() && memorization[i]) ++mem[b];
    for (std::size_t m = 0; m < metric_rows.size(); ++m) sums[b][m] += metric_rows[m][i];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    BinRow row;
    row.bin = b;
    row.lo = q.edges[b];
    row.hi = q.edges[b + 1];
    row.count = counts[b];
    if (!memorization.empty() && counts[b] > 0) {
      row.mem_ratio = 100.0 * static_cast<double>(mem[b]) / static_cast<double>(counts[b]);
    }
    for (std::size_t m = 0; m < metric_rows.size(); ++m) {
      if (counts[b] == 0) {
        row.mean.emplace_back();
      } else {
        row.mean.emplace_back(sums[b][m] / static_cast<double>(counts[b]));
      }
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

GridReport binned_grid(std::string x_key, std::span<const double> xs, std::string y_key,
                       std::span<const double> ys, std::string model_a, std::span<const double> a,
                       std::string model_b, std::span<const double> b, std::size_t bins) {
  if (xs.size() != ys.size() || xs.size() != a.size() || xs.size() != b.size()) {
    throw ValidationError("binned grid: inputs differ in length");
  }
  const QuantileBins qx = quantile_bins(xs, bins);
  const QuantileBins qy = quantile_bins(ys, bins);
  GridReport g{std::move(x_key), std::move(y_key), std::move(model_a), std::move(model_b), bins,
               qx.edges, qy.edges, std::vector<std::size_t>(bins * bins, 0), {}};
  std::vector<double> sums(bins * bins, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t cell = qx.assign[i] * bins + qy.assign[i];
    ++g.counts[cell];
    sums[cell] += a[i] - b[i];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (g.counts[c] == 0) {
      g.mean_delta.emplace_back();
    } else {
      g.mean_delta.emplace_back(sums[c] / static_cast<double>(g.counts[c]));
    }
  }
  return g;
}

}  // namespace recmem
