#pragma once

// Memorization / generalization attribution of prediction instances from the
// item transitions observed in training data.
//
// An instance (history, target) is memorization-related when the adjacent
// pair [i_{t-1} -> i_t] occurs in some training sequence. Otherwise each
// generalization type is checked independently at hops k = 1..max_hop (k >= 2
// for substitutability) and its minimum firing hop is recorded:
//
//   substitutability  some training sequence holds i_{t-k} before i_t
//   symmetry          [i_t -> i_{t-k}] observed
//   transitivity      [i_{t-k} -> x] and [x -> i_t] observed
//   2nd symmetry      common cause   [x -> i_{t-k}] and [x -> i_t]
//                     common effect  [i_{t-k} -> x] and [i_t -> x]
//                     reverse path   [i_t -> x] and [x -> i_{t-k}]
//
// Bridge items x must differ from both endpoints. "Observed" means an
// adjacent training pair in MatchMode::kAdjacent and an ordered co-occurrence
// at any gap in MatchMode::kAnyGap.

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "recmem/domain.hpp"
#include "recmem/transition_index.hpp"

namespace recmem {

enum class MatchMode { kAdjacent, kAnyGap };

enum class SecondSymmetryKind { kCommonCause, kCommonEffect, kReversePath };

std::string_view to_string(MatchMode mode);
std::string_view to_string(SecondSymmetryKind kind);
MatchMode parse_match_mode(std::string_view s);
SecondSymmetryKind parse_second_symmetry_kind(std::string_view s);

struct AttributionConfig {
  int max_hop = 4;
  MatchMode match = MatchMode::kAdjacent;

  void validate() const;
};

struct CategoryRecord {
  bool memorization = false;
  std::optional<int> substitutability_hop;
  std::optional<int> symmetry_hop;
  std::optional<int> transitivity_hop;
  std::optional<int> second_symmetry_hop;
  std::optional<SecondSymmetryKind> second_symmetry_kind;
  bool uncategorized = false;

  bool generalization() const {
    return substitutability_hop || symmetry_hop || transitivity_hop || second_symmetry_hop;
  }

  friend bool operator==(const CategoryRecord&, const CategoryRecord&) = default;
};

struct TransitivityMatch {
  int hop = 0;
  ItemId witness = 0;
  friend bool operator==(const TransitivityMatch&, const TransitivityMatch&) = default;
};

struct SecondSymmetryMatch {
  int hop = 0;
  SecondSymmetryKind kind = SecondSymmetryKind::kCommonCause;
  ItemId witness = 0;
  friend bool operator==(const SecondSymmetryMatch&, const SecondSymmetryMatch&) = default;
};

bool check_memorization(const TransitionIndex& index, const Instance& inst);

// The generalization checks assume the instance is not memorization-related;
// attribute() enforces that ordering. They scan k up to
// min(max_hop, |history|).
std::optional<int> check_substitutability(const TransitionIndex& index, const Instance& inst,
                                          int max_hop);
std::optional<int> check_symmetry(const TransitionIndex& index, const Instance& inst,
                                  const AttributionConfig& cfg);
std::optional<TransitivityMatch> check_transitivity(const TransitionIndex& index,
                                                    const Instance& inst,
                                                    const AttributionConfig& cfg);
std::optional<SecondSymmetryMatch> check_second_symmetry(const TransitionIndex& index,
                                                         const Instance& inst,
                                                         const AttributionConfig& cfg);

/// Full record for one instance. `cfg.max_hop` must not exceed the index's.
CategoryRecord attribute(const TransitionIndex& index, const Instance& inst,
                         const AttributionConfig& cfg);

/// Instance counts per category; percent() converts a count to a share.
/// Cell (type, hop) counts an instance whose minimum hop for that type equals
/// `hop`.
struct RatioSummary {
  std::size_t total = 0;
  std::size_t memorization = 0;
  std::size_t generalization = 0;
  std::size_t uncategorized = 0;
  // Indexed [hop - 1]; hop 1 of substitutability stays zero.
  std::vector<std::size_t> substitutability;
  std::vector<std::size_t> symmetry;
  std::vector<std::size_t> transitivity;
  std::vector<std::size_t> second_symmetry;
  std::array<std::size_t, 3> second_symmetry_kind{};

  /// False for an empty instance list; percentages are then reported as 0.
  bool defined() const { return total > 0; }
  double percent(std::size_t count) const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
  }
};

struct AttributionResult {
  std::vector<CategoryRecord> records;
  RatioSummary summary;
};

RatioSummary summarize(std::span<const CategoryRecord> records, int max_hop);

/// Attributes every instance; records come back in input order regardless of
/// the thread count.
AttributionResult attribute_all(const TransitionIndex& index, std::span<const Instance> instances,
                                const AttributionConfig& cfg, unsigned threads = 1);

/// Reference implementation reading the definitions literally: observed
/// pairs come from a direct scan of every training sequence and bridge items
/// are enumerated over the whole vocabulary. Shares no code with the indexed
/// path. Scans once at construction so one corpus can serve many instances.
class BruteForceAttributor {
 public:
  explicit BruteForceAttributor(const Dataset& train);

  CategoryRecord attribute(const Instance& inst, const AttributionConfig& cfg) const;

 private:
  bool adjacent(ItemId a, ItemId b) const { return adjacent_.contains({a, b}); }
  bool ordered(ItemId a, ItemId b) const { return ordered_.contains({a, b}); }
  bool seen(ItemId a, ItemId b, MatchMode mode) const {
    return mode == MatchMode::kAdjacent ? adjacent(a, b) : ordered(a, b);
  }
  template <class Pred>
  bool exists_bridge(ItemId a, ItemId b, Pred&& pred) const;

  std::size_t num_items_;
  std::set<std::pair<ItemId, ItemId>> adjacent_;
  std::set<std::pair<ItemId, ItemId>> ordered_;
};

/// One-shot O(|D| * len^2) scan; same contract as attribute().
CategoryRecord attribute_bruteforce(const Dataset& train, const Instance& inst,
                                    const AttributionConfig& cfg);

}  // namespace recmem
