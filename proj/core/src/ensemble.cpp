#include "recmem/ensemble.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "recmem/error.hpp"
#include "recmem/parallel.hpp"

namespace recmem {

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::kAdaptive ? "adaptive" : "fixed";
}

std::string_view to_string(Normalization norm) {
  return norm == Normalization::kMinMax ? "minmax" : "rank_reciprocal";
}

FusionMode parse_fusion_mode(std::string_view s) {
  if (s == "adaptive") return FusionMode::kAdaptive;
  if (s == "fixed") return FusionMode::kFixed;
  throw ValidationError(fmt::format("unknown fusion mode '{}' (expected adaptive|fixed)", s));
}

Normalization parse_normalization(std::string_view s) {
  if (s == "minmax") return Normalization::kMinMax;
  if (s == "rank_reciprocal") return Normalization::kRankReciprocal;
  throw ValidationError(
      fmt::format("unknown normalization '{}' (expected minmax|rank_reciprocal)", s));
}

void EnsembleConfig::validate() const {
  if (!std::isfinite(q) || q < 0.0) throw ValidationError(fmt::format("q must be >= 0, got {}", q));
  if (!std::isfinite(tau)) throw ValidationError("tau must be finite");
  if (!(alpha_static >= 0.0 && alpha_static <= 1.0)) {
    throw ValidationError(fmt::format("alpha_static must lie in [0, 1], got {}", alpha_static));
  }
}

double msp(const PredictionList& pred_id) {
  if (!pred_id.is_probability) throw ValidationError("MSP requires probability scores");
  if (pred_id.ranked.empty()) throw ValidationError("MSP of an empty prediction list");
  double best = pred_id.ranked.front().score;
  for (const auto& s : pred_id.ranked) best = std::max(best, s.score);
  return best;
}

double alpha_weight(double s_conf, double q, double tau) {
  const double z = -q * (s_conf - tau);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> normalize_scores(const PredictionList& pred, Normalization norm) {
  std::vector<double> out(pred.ranked.size());
  if (out.empty()) return out;
  if (norm == Normalization::kRankReciprocal) {
    // Rank under the canonical order, so input order does not matter.
    std::vector<std::size_t> order(out.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ranks_before(pred.ranked[a], pred.ranked[b]);
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      out[order[r]] = 1.0 / (kRankReciprocalOffset + static_cast<double>(r + 1));
    }
    return out;
  }
  auto [lo_it, hi_it] = std::minmax_element(
      pred.ranked.begin(), pred.ranked.end(),
      [](const ScoredItem& a, const ScoredItem& b) { return a.score < b.score; });
  const double lo = lo_it->score;
  const double span = hi_it->score - lo;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = span > 0.0 ? (pred.ranked[i].score - lo) / span : 1.0;
  }
  return out;
}

FusionResult fuse_with_alpha(const PredictionList& pred_id, const PredictionList& pred_gr,
                             double alpha, Normalization norm) {
  if (pred_id.user != pred_gr.user) {
    throw ValidationError(
        fmt::format("user mismatch in fusion ({} vs {})", pred_id.user, pred_gr.user));
  }
  if (pred_id.ranked.empty() || pred_gr.ranked.empty()) {
    throw ValidationError(fmt::format("empty prediction list for user {}", pred_id.user));
  }
  const auto nid = normalize_scores(pred_id, norm);
  const auto ngr = normalize_scores(pred_gr, norm);

  std::unordered_map<ItemId, std::size_t> slot;
  PredictionList fused;
  fused.user = pred_id.user;
  fused.ranked.reserve(pred_id.ranked.size() + pred_gr.ranked.size());
  auto add = [&](ItemId item, double contribution) {
    auto [it, fresh] = slot.try_emplace(item, fused.ranked.size());
    if (fresh) fused.ranked.push_back({item, 0.0});
    fused.ranked[it->second].score += contribution;
  };
  for (std::size_t i = 0; i < pred_gr.ranked.size(); ++i) add(pred_gr.ranked[i].item, alpha * ngr[i]);
  for (std::size_t i = 0; i < pred_id.ranked.size(); ++i) {
    add(pred_id.ranked[i].item, (1.0 - alpha) * nid[i]);
  }
  canonicalize(fused);
  FusionResult r;
  r.union_size = fused.ranked.size();
  r.fused = std::move(fused);
  r.alpha = alpha;
  return r;
}

FusionResult fuse(const PredictionList& pred_id, const PredictionList& pred_gr,
                  const EnsembleConfig& cfg) {
  cfg.validate();
  if (cfg.mode == FusionMode::kFixed) {
    return fuse_with_alpha(pred_id, pred_gr, 1.0 - cfg.alpha_static, cfg.normalization);
  }
  const double s = msp(pred_id);
  FusionResult r = fuse_with_alpha(pred_id, pred_gr, alpha_weight(s, cfg.q, cfg.tau), cfg.normalization);
  r.s_conf = s;
  return r;
}

TuneGrids TuneGrids::defaults() {
  TuneGrids g;
  g.q = {1.0, 5.0, 9.0, 13.0};
  for (int i = 0; i <= 5; ++i) g.tau.push_back(i / 10.0);
  for (int i = 0; i <= 10; ++i) g.alpha_static.push_back(i / 10.0);
  return g;
}

namespace {

void check_aligned(std::span<const PredictionList> a, std::span<const PredictionList> b) {
  if (a.size() != b.size()) {
    throw ValidationError(
        fmt::format("prediction files differ in length ({} vs {})", a.size(), b.size()));
  }
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

TuneResult tune(std::span<const ItemId> targets, std::span<const PredictionList> preds_id,
                std::span<const PredictionList> preds_gr, const TuneGrids& grids,
                Normalization norm, std::size_t k, unsigned threads) {
  if (targets.empty()) throw ValidationError("empty validation set");
  check_aligned(preds_id, preds_gr);
  if (preds_id.size() != targets.size()) {
    throw ValidationError(fmt::format("{} prediction lists for {} validation instances",
                                      preds_id.size(), targets.size()));
  }
  const auto qs = sorted_unique(grids.q);
  const auto taus = sorted_unique(grids.tau);
  const auto statics = sorted_unique(grids.alpha_static);

  TuneResult out;
  for (double q : qs) {
    for (double tau : taus) {
      EnsembleConfig c;
      c.q = q;
      c.tau = tau;
      c.mode = FusionMode::kAdaptive;
      c.normalization = norm;
      c.validate();
      out.adaptive.push_back({c, 0.0});
    }
  }
  for (double a : statics) {
    EnsembleConfig c;
    c.alpha_static = a;
    c.mode = FusionMode::kFixed;
    c.normalization = norm;
    c.validate();
    out.fixed.push_back({c, 0.0});
  }

  // Each config's mean is summed in instance order, so the result is
  // independent of the thread count.
  std::vector<GridPoint*> all;
  for (auto& p : out.adaptive) all.push_back(&p);
  for (auto& p : out.fixed) all.push_back(&p);
  parallel_for_chunks(all.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double sum = 0.0;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        sum += ndcg_at_k(fuse(preds_id[i], preds_gr[i], all[c]->config).fused, targets[i], k);
      }
      all[c]->ndcg = sum / static_cast<double>(targets.size());
    }
  });

  auto argmax = [](const std::vector<GridPoint>& pts) {
    GridPoint best = pts.front();
    for (const auto& p : pts) {
      if (p.ndcg > best.ndcg) best = p;
    }
    return best;
  };
  if (!out.adaptive.empty()) out.best_adaptive = argmax(out.adaptive);
  if (!out.fixed.empty()) out.best_fixed = argmax(out.fixed);
  return out;
}

std::vector<PredictionList> fuse_all(std::span<const PredictionList> preds_id,
                                     std::span<const PredictionList> preds_gr,
                                     const EnsembleConfig& cfg, unsigned threads) {
  check_aligned(preds_id, preds_gr);
  std::vector<PredictionList> out(preds_id.size());
  parallel_for_chunks(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fuse(preds_id[i], preds_gr[i], cfg).fused;
  });
  return out;
}

BinnedReport indicator_report(std::span<const ItemId> targets,
                              std::span<const PredictionList> preds_id,
                              std::span<const PredictionList> preds_gr,
                              std::span<const CategoryRecord> records, std::size_t bins,
                              std::size_t k, std::string_view id_name, std::string_view gr_name) {
  check_aligned(preds_id, preds_gr);
  if (targets.size() != preds_id.size() || records.size() != targets.size()) {
    throw ValidationError("indicator report: targets, predictions and labels differ in length");
  }
  std::vector<double> keys;
  std::vector<std::uint8_t> mem;
  keys.reserve(targets.size());
  for (const auto& p : preds_id) keys.push_back(msp(p));
  for (const auto& r : records) mem.push_back(r.memorization ? 1 : 0);

  const auto id_scores = score_model(std::string(id_name), preds_id, targets, k);
  const auto gr_scores = score_model(std::string(gr_name), preds_gr, targets, k);
  const std::vector<std::string> names{id_scores.name, gr_scores.name};
  const std::vector<std::vector<double>> rows{id_scores.ndcg, gr_scores.ndcg};
  return binned_report("msp", keys, fmt::format("ndcg@{}", k), names, rows, mem, bins);
}

}  // namespace recmem
