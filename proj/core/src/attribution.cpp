#include "recmem/attribution.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "recmem/error.hpp"
#include "recmem/parallel.hpp"

namespace recmem {

std::string_view to_string(MatchMode mode) {
  return mode == MatchMode::kAdjacent ? "adjacent" : "any_gap";
}

std::string_view to_string(SecondSymmetryKind kind) {
  switch (kind) {
    case SecondSymmetryKind::kCommonCause:
      return "common_cause";
    case SecondSymmetryKind::kCommonEffect:
      return "common_effect";
    case SecondSymmetryKind::kReversePath:
      return "reverse_path";
  }
  return "?";
}

MatchMode parse_match_mode(std::string_view s) {
  if (s == "adjacent") return MatchMode::kAdjacent;
  if (s == "any_gap") return MatchMode::kAnyGap;
  throw ValidationError(fmt::format("unknown match mode '{}' (expected adjacent|any_gap)", s));
}

SecondSymmetryKind parse_second_symmetry_kind(std::string_view s) {
  if (s == "common_cause") return SecondSymmetryKind::kCommonCause;
  if (s == "common_effect") return SecondSymmetryKind::kCommonEffect;
  if (s == "reverse_path") return SecondSymmetryKind::kReversePath;
  throw ValidationError(fmt::format("unknown 2nd-order symmetry kind '{}'", s));
}

void AttributionConfig::validate() const {
  if (max_hop < 1) throw ValidationError(fmt::format("max_hop must be >= 1, got {}", max_hop));
}

namespace {

int hop_limit(const Instance& inst, int max_hop) {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(max_hop), inst.history.size()));
}

IdSpan out_set(const TransitionIndex& index, ItemId item, MatchMode mode) {
  return mode == MatchMode::kAdjacent ? index.successors(item, 1) : index.any_gap_successors(item);
}

IdSpan in_set(const TransitionIndex& index, ItemId item, MatchMode mode) {
  return mode == MatchMode::kAdjacent ? index.predecessors(item, 1) : index.any_gap_predecessors(item);
}

bool observed(const TransitionIndex& index, ItemId a, ItemId b, MatchMode mode) {
  return mode == MatchMode::kAdjacent ? index.contains({a, b, 1}) : index.contains_any_gap(a, b);
}

}  // namespace

bool check_memorization(const TransitionIndex& index, const Instance& inst) {
  if (inst.history.empty()) return false;
  return index.contains({inst.back(1), inst.target, 1});
}

std::optional<int> check_substitutability(const TransitionIndex& index, const Instance& inst,
                                          int max_hop) {
  const int limit = hop_limit(inst, max_hop);
  for (int k = 2; k <= limit; ++k) {
    if (index.contains_any_gap(inst.back(static_cast<std::size_t>(k)), inst.target)) return k;
  }
  return std::nullopt;
}

std::optional<int> check_symmetry(const TransitionIndex& index, const Instance& inst,
                                  const AttributionConfig& cfg) {
  const int limit = hop_limit(inst, cfg.max_hop);
  for (int k = 1; k <= limit; ++k) {
    if (observed(index, inst.target, inst.back(static_cast<std::size_t>(k)), cfg.match)) return k;
  }
  return std::nullopt;
}

std::optional<TransitivityMatch> check_transitivity(const TransitionIndex& index,
                                                    const Instance& inst,
                                                    const AttributionConfig& cfg) {
  const int limit = hop_limit(inst, cfg.max_hop);
  const IdSpan into_target = in_set(index, inst.target, cfg.match);
  for (int k = 1; k <= limit; ++k) {
    const ItemId source = inst.back(static_cast<std::size_t>(k));
    if (auto x = first_common(out_set(index, source, cfg.match), into_target, source, inst.target)) {
      return TransitivityMatch{k, *x};
    }
  }
  return std::nullopt;
}

std::optional<SecondSymmetryMatch> check_second_symmetry(const TransitionIndex& index,
                                                         const Instance& inst,
                                                         const AttributionConfig& cfg) {
  const int limit = hop_limit(inst, cfg.max_hop);
  const ItemId target = inst.target;
  const IdSpan target_in = in_set(index, target, cfg.match);
  const IdSpan target_out = out_set(index, target, cfg.match);
  for (int k = 1; k <= limit; ++k) {
    const ItemId source = inst.back(static_cast<std::size_t>(k));
    const IdSpan source_in = in_set(index, source, cfg.match);
    if (auto x = first_common(source_in, target_in, source, target)) {
      return SecondSymmetryMatch{k, SecondSymmetryKind::kCommonCause, *x};
    }
    if (auto x = first_common(out_set(index, source, cfg.match), target_out, source, target)) {
      return SecondSymmetryMatch{k, SecondSymmetryKind::kCommonEffect, *x};
    }
    if (auto x = first_common(target_out, source_in, source, target)) {
      return SecondSymmetryMatch{k, SecondSymmetryKind::kReversePath, *x};
    }
  }
  return std::nullopt;
}

CategoryRecord attribute(const TransitionIndex& index, const Instance& inst,
                         const AttributionConfig& cfg) {
  if (cfg.max_hop > index.max_hop()) {
    throw ValidationError(fmt::format("attribution max_hop {} exceeds index max_hop {}",
                                      cfg.max_hop, index.max_hop()));
  }
  CategoryRecord rec;
  if (check_memorization(index, inst)) {
    rec.memorization = true;
    return rec;
  }
  rec.substitutability_hop = check_substitutability(index, inst, cfg.max_hop);
  rec.symmetry_hop = check_symmetry(index, inst, cfg);
  if (auto t = check_transitivity(index, inst, cfg)) rec.transitivity_hop = t->hop;
  if (auto s = check_second_symmetry(index, inst, cfg)) {
    rec.second_symmetry_hop = s->hop;
    rec.second_symmetry_kind = s->kind;
  }
  rec.uncategorized = !rec.generalization();
  return rec;
}

RatioSummary summarize(std::span<const CategoryRecord> records, int max_hop) {
  RatioSummary s;
  const auto hops = static_cast<std::size_t>(std::max(1, max_hop));
  s.substitutability.assign(hops, 0);
  s.symmetry.assign(hops, 0);
  s.transitivity.assign(hops, 0);
  s.second_symmetry.assign(hops, 0);
  auto bump = [&](std::vector<std::size_t>& cells, const std::optional<int>& hop) {
    if (!hop) return;
    const auto h = static_cast<std::size_t>(*hop);
    if (h >= 1 && h <= cells.size()) ++cells[h - 1];
  };
  for (const auto& r : records) {
    ++s.total;
    if (r.memorization) {
      ++s.memorization;
    } else if (r.generalization()) {
      ++s.generalization;
    } else {
      ++s.uncategorized;
    }
    bump(s.substitutability, r.substitutability_hop);
    bump(s.symmetry, r.symmetry_hop);
    bump(s.transitivity, r.transitivity_hop);
    bump(s.second_symmetry, r.second_symmetry_hop);
    if (r.second_symmetry_kind) ++s.second_symmetry_kind[static_cast<std::size_t>(*r.second_symmetry_kind)];
  }
  return s;
}

AttributionResult attribute_all(const TransitionIndex& index, std::span<const Instance> instances,
                                const AttributionConfig& cfg, unsigned threads) {
  cfg.validate();
  AttributionResult out;
  out.records.resize(instances.size());
  parallel_for_chunks(instances.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out.records[i] = attribute(index, instances[i], cfg);
  });
  out.summary = summarize(out.records, cfg.max_hop);
  return out;
}

// ---------------------------------------------------------------- brute force

BruteForceAttributor::BruteForceAttributor(const Dataset& train) : num_items_(train.num_items()) {
  for (const auto& seq : train.sequences) {
    const auto& s = seq.items;
    for (std::size_t p = 0; p < s.size(); ++p) {
      for (std::size_t q = p + 1; q < s.size(); ++q) {
        if (q == p + 1) adjacent_.emplace(s[p], s[q]);
        ordered_.emplace(s[p], s[q]);
      }
    }
  }
}

template <class Pred>
bool BruteForceAttributor::exists_bridge(ItemId a, ItemId b, Pred&& pred) const {
  for (ItemId x = 0; x < num_items_; ++x) {
    if (x == a || x == b) continue;
    if (pred(x)) return true;
  }
  return false;
}

CategoryRecord BruteForceAttributor::attribute(const Instance& inst,
                                               const AttributionConfig& cfg) const {
  cfg.validate();
  CategoryRecord rec;
  if (inst.history.empty()) {
    rec.uncategorized = true;
    return rec;
  }
  const ItemId t = inst.target;
  if (adjacent(inst.back(1), t)) {
    rec.memorization = true;
    return rec;
  }
  const auto m = cfg.match;
  const int limit = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.max_hop),
                                                            inst.history.size()));
  for (int k = 1; k <= limit; ++k) {
    const ItemId s = inst.back(static_cast<std::size_t>(k));
    if (!rec.substitutability_hop && k >= 2 && ordered(s, t)) rec.substitutability_hop = k;
    if (!rec.symmetry_hop && seen(t, s, m)) rec.symmetry_hop = k;
    if (!rec.transitivity_hop &&
        exists_bridge(s, t, [&](ItemId x) { return seen(s, x, m) && seen(x, t, m); })) {
      rec.transitivity_hop = k;
    }
    if (!rec.second_symmetry_hop) {
      std::optional<SecondSymmetryKind> kind;
      if (exists_bridge(s, t, [&](ItemId x) { return seen(x, s, m) && seen(x, t, m); })) {
        kind = SecondSymmetryKind::kCommonCause;
      } else if (exists_bridge(s, t, [&](ItemId x) { return seen(s, x, m) && seen(t, x, m); })) {
        kind = SecondSymmetryKind::kCommonEffect;
      } else if (exists_bridge(s, t, [&](ItemId x) { return seen(t, x, m) && seen(x, s, m); })) {
        kind = SecondSymmetryKind::kReversePath;
      }
      if (kind) {
        rec.second_symmetry_hop = k;
        rec.second_symmetry_kind = kind;
      }
    }
  }
  rec.uncategorized = !rec.generalization();
  return rec;
}

CategoryRecord attribute_bruteforce(const Dataset& train, const Instance& inst,
                                    const AttributionConfig& cfg) {
  return BruteForceAttributor(train).attribute(inst, cfg);
}

}  // namespace recmem
