#pragma once

// Score fusion of an ID-based model and a generative-retrieval (GR) model.
//
// The GR weight alpha either adapts per user through the ID model's maximum
// softmax probability (high confidence shifts weight to the ID model) or is
// a global constant 1 - alpha_static.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/metrics.hpp"

namespace recmem {

enum class FusionMode { kAdaptive, kFixed };
enum class Normalization { kMinMax, kRankReciprocal };

std::string_view to_string(FusionMode mode);
std::string_view to_string(Normalization norm);
FusionMode parse_fusion_mode(std::string_view s);
Normalization parse_normalization(std::string_view s);

inline constexpr double kRankReciprocalOffset = 60.0;

struct EnsembleConfig {
  double q = 5.0;
  double tau = 0.2;
  double alpha_static = 0.5;  // ID-model weight in fixed mode
  FusionMode mode = FusionMode::kAdaptive;
  Normalization normalization = Normalization::kMinMax;

  void validate() const;
};

/// Top-1 score of a probability list. Throws ValidationError("MSP requires
/// probability scores") otherwise, and for an empty list.
double msp(const PredictionList& pred_id);

/// sigmoid(-q (s_conf - tau)), evaluated without overflow.
double alpha_weight(double s_conf, double q, double tau);

/// Per-list normalized scores in list order. Min-max maps a constant list to
/// 1; rank-reciprocal gives 1 / (60 + rank).
std::vector<double> normalize_scores(const PredictionList& pred, Normalization norm);

struct FusionResult {
  PredictionList fused;
  double alpha = 0.0;             // GR-model weight
  std::optional<double> s_conf;   // MSP, in adaptive mode
  std::size_t union_size = 0;
};

/// alpha * norm_gr + (1 - alpha) * norm_id over the union of both lists;
/// items absent from a list take 0 for that model.
FusionResult fuse_with_alpha(const PredictionList& pred_id, const PredictionList& pred_gr,
                             double alpha, Normalization norm);

FusionResult fuse(const PredictionList& pred_id, const PredictionList& pred_gr,
                  const EnsembleConfig& cfg);

struct TuneGrids {
  std::vector<double> q;
  std::vector<double> tau;
  std::vector<double> alpha_static;

  /// q in {1,5,9,13}, tau in {0, 0.1, ..., 0.5}, alpha_static in {0, 0.1, ..., 1}.
  static TuneGrids defaults();
};

struct GridPoint {
  EnsembleConfig config;
  double ndcg = 0.0;
};

struct TuneResult {
  std::vector<GridPoint> adaptive;  // in (q, tau) ascending order
  std::vector<GridPoint> fixed;     // in alpha_static ascending order
  GridPoint best_adaptive;
  GridPoint best_fixed;

  std::size_t evaluated() const { return adaptive.size() + fixed.size(); }
};

/// Exhaustive search maximizing mean validation NDCG@k. Ties go to the
/// smaller q, then the smaller tau (fixed mode: the smaller alpha_static).
/// Throws ValidationError on empty or misaligned validation data.
TuneResult tune(std::span<const ItemId> targets, std::span<const PredictionList> preds_id,
                std::span<const PredictionList> preds_gr, const TuneGrids& grids,
                Normalization norm, std::size_t k = 10, unsigned threads = 1);

/// Fused list for every instance.
std::vector<PredictionList> fuse_all(std::span<const PredictionList> preds_id,
                                     std::span<const PredictionList> preds_gr,
                                     const EnsembleConfig& cfg, unsigned threads = 1);

/// MSP-quantile bins with memorization ratio and NDCG@k of both models.
BinnedReport indicator_report(std::span<const ItemId> targets,
                              std::span<const PredictionList> preds_id,
                              std::span<const PredictionList> preds_gr,
                              std::span<const CategoryRecord> records, std::size_t bins,
                              std::size_t k = 10, std::string_view id_name = "id",
                              std::string_view gr_name = "gr");

}  // namespace recmem
