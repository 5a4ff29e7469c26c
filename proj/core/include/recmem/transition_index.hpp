#pragma once

// Per-hop item-transition statistics over training sequences.
//
// For every exact positional gap h in [1, max_hop] the index keeps a
// successor relation (with occurrence counts) and its transpose, plus an
// "any gap" ordered co-occurrence relation. Rows are sorted id arrays in CSR
// layout so existential bridge checks reduce to galloping intersections.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "recmem/domain.hpp"
#include "recmem/id_set.hpp"

namespace recmem {

/// Compressed sparse rows of sorted item ids, optionally with a parallel
/// count per entry.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(std::vector<std::uint64_t> offsets, std::vector<ItemId> targets,
            std::vector<std::uint32_t> counts);

  std::size_t num_rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t nnz() const { return targets_.size(); }
  bool has_counts() const { return !counts_.empty() || targets_.empty(); }

  IdSpan row(ItemId r) const;
  std::span<const std::uint32_t> row_counts(ItemId r) const;

  /// Occurrence count of (r, c); 0 if absent. Sets without counts report 1.
  std::uint32_t count(ItemId r, ItemId c) const;
  bool contains(ItemId r, ItemId c) const { return set_contains(row(r), c); }

  /// Row-major transpose with `rows` output rows; counts carried along.
  Adjacency transpose(std::size_t rows) const;

  const std::vector<std::uint64_t>& offsets() const { return offsets_; }
  const std::vector<ItemId>& targets() const { return targets_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::vector<std::uint64_t> offsets_;
  std::vector<ItemId> targets_;
  std::vector<std::uint32_t> counts_;
};

class TransitionIndex {
 public:
  static constexpr std::uint8_t kFormatVersion = 1;

  /// Builds the index over `train`. Work is sharded across `threads` workers
  /// by owning item; the result does not depend on the thread count.
  /// Throws ValidationError if max_hop < 1.
  static TransitionIndex build(const Dataset& train, int max_hop, unsigned threads = 1);

  int max_hop() const { return max_hop_; }
  std::size_t num_items() const { return num_items_; }

  /// count[hop][(source, dest)] >= 1. Throws ValidationError if the hop is
  /// outside [1, max_hop].
  bool contains(const TransitionQuery& q) const;
  std::uint32_t count(ItemId source, ItemId dest, int hop) const;
  std::uint64_t out_total(ItemId source, int hop) const;

  /// Some training sequence holds `source` strictly before `dest`.
  bool contains_any_gap(ItemId source, ItemId dest) const {
    return any_succ_.contains(source, dest);
  }

  IdSpan successors(ItemId item, int hop) const { return relation(succ_, hop).row(item); }
  IdSpan predecessors(ItemId item, int hop) const { return relation(pred_, hop).row(item); }
  IdSpan any_gap_successors(ItemId item) const { return any_succ_.row(item); }
  IdSpan any_gap_predecessors(ItemId item) const { return any_pred_.row(item); }

  const Adjacency& successor_relation(int hop) const { return relation(succ_, hop); }
  const Adjacency& any_gap_relation() const { return any_succ_; }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  /// Throws ValidationError on bad magic, version mismatch or truncation.
  static TransitionIndex load(std::istream& in);
  static TransitionIndex load(const std::filesystem::path& path);

 private:
  const Adjacency& relation(const std::vector<Adjacency>& rel, int hop) const;
  void finish_derived();

  int max_hop_ = 0;
  std::size_t num_items_ = 0;
  std::vector<Adjacency> succ_;  // index hop-1
  std::vector<Adjacency> pred_;
  std::vector<std::vector<std::uint64_t>> out_total_;
  Adjacency any_succ_;
  Adjacency any_pred_;
};

}  // namespace recmem
