#pragma once

// Single-target ranking metrics, per-category breakdowns and quantile-binned
// reports.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/domain.hpp"

namespace recmem {

struct ScoredItem {
  ItemId item = 0;
  double score = 0.0;
  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// One model's ranked candidates for one user.
struct PredictionList {
  UserId user = 0;
  std::vector<ScoredItem> ranked;
  bool is_probability = false;

  /// Non-increasing scores, unique items, and for probability lists scores in
  /// [0, 1] summing to at most 1 + 1e-6. Throws ValidationError.
  void validate() const;
};

inline constexpr double kProbabilitySlack = 1e-6;

/// Orders by (score desc, item asc), the tie rule every metric uses.
void canonicalize(PredictionList& list);
bool ranks_before(const ScoredItem& a, const ScoredItem& b);

/// 1-based rank of `target` under the canonical order; nullopt if absent.
std::optional<std::size_t> rank_of(const PredictionList& pred, ItemId target);

double ndcg_at_k(const PredictionList& pred, ItemId target, std::size_t k);
double recall_at_k(const PredictionList& pred, ItemId target, std::size_t k);

/// Per-instance metric values of one model.
struct ModelScores {
  std::string name;
  std::vector<double> ndcg;
  std::vector<double> recall;
};

ModelScores score_model(std::string name, std::span<const PredictionList> preds,
                        std::span<const ItemId> targets, std::size_t k);

enum class CellKind { kMemorization, kGeneralization, kSubstitutability, kSymmetry,
                      kTransitivity, kSecondSymmetry, kUncategorized };

std::string_view to_string(CellKind kind);

struct BreakdownCell {
  CellKind kind = CellKind::kMemorization;
  int hop = 0;  // 0 for the aggregate columns
  std::size_t count = 0;
  double ratio = 0.0;  // percent of all instances
  // Per model, mean over the cell; nullopt for an empty cell.
  std::vector<std::optional<double>> ndcg;
  std::vector<std::optional<double>> recall;

  std::string label() const;
};

struct BreakdownReport {
  std::size_t k = 10;
  std::size_t total = 0;
  std::vector<std::string> models;
  std::vector<BreakdownCell> cells;
};

/// Mean metrics per category cell. An instance lands in exactly one of
/// memorization / generalization / uncategorized and in every per-type hop
/// cell it carries. Throws ValidationError on misaligned inputs.
BreakdownReport breakdown(std::span<const CategoryRecord> records, std::span<const ModelScores> models,
                          std::size_t k, int max_hop);

struct QuantileBins {
  std::vector<double> edges;        // B + 1 values: min, inner cut points, max
  std::vector<std::size_t> assign;  // bin of each input value
  std::size_t bins = 0;
};

/// Inner edge i is the empirical i/B quantile (smallest value whose CDF
/// reaches i/B). A value equal to an edge goes to the lower bin.
/// Throws ValidationError for empty input, B = 0 or non-finite values.
QuantileBins quantile_bins(std::span<const double> values, std::size_t bins);

struct BinRow {
  std::size_t bin = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mem_ratio;  // percent, when memorization flags are given
  std::vector<std::optional<double>> mean;  // per model
};

struct BinnedReport {
  std::string key;
  std::string metric;
  std::vector<std::string> models;
  std::vector<BinRow> rows;
};

/// 1-D report over quantile bins of `keys`. `metric_rows[m][i]` is model m's
/// metric on instance i. `memorization` may be empty.
BinnedReport binned_report(std::string key, std::span<const double> keys, std::string metric,
                           std::span<const std::string> model_names,
                           std::span<const std::vector<double>> metric_rows,
                           std::span<const std::uint8_t> memorization, std::size_t bins);

struct GridReport {
  std::string x_key;
  std::string y_key;
  std::string model_a;
  std::string model_b;
  std::size_t bins = 0;
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<std::size_t> counts;               // row-major [x_bin * bins + y_bin]
  std::vector<std::optional<double>> mean_delta;  // mean(a - b); nullopt if empty
};

/// 2-D quantile grid of the mean difference a - b.
GridReport binned_grid(std::string x_key, std::span<const double> xs, std::string y_key,
                       std::span<const double> ys, std::string model_a, std::span<const double> a,
                       std::string model_b, std::span<const double> b, std::size_t bins);

}  // namespace recmem
