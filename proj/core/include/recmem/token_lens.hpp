#pragma once

// Token-level view of item transitions under a semantic-ID tokenization.
//
// Each item maps to L tokens [z_1..z_L], coarse to fine, the last one an
// identifier token that makes full sequences unique. Prefix n-gram
// memorization asks whether the length-n prefixes of both endpoints of a
// k-hop transition were seen as a k-hop pair in training, even if the items
// themselves differ.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/domain.hpp"
#include "recmem/transition_index.hpp"

namespace recmem {

using Token = std::uint32_t;

class SemanticIdMap {
 public:
  /// `codebook_sizes` holds one size per level (V_1..V_L).
  SemanticIdMap(std::size_t length, std::vector<std::uint32_t> codebook_sizes);

  std::size_t length() const { return length_; }
  const std::vector<std::uint32_t>& codebook_sizes() const { return codebook_sizes_; }

  /// Throws ValidationError on a wrong token count or a token outside its
  /// codebook.
  void assign(ItemId item, std::span<const Token> tokens);

  bool has(ItemId item) const { return item < present_.size() && present_[item] != 0; }
  /// Throws ValidationError("untokenized item ...") if absent.
  std::span<const Token> tokens(ItemId item) const;

  /// Items in [0, num_items) without tokens.
  std::vector<ItemId> untokenized(std::size_t num_items) const;
  /// Throws ValidationError if two items share a full token sequence.
  void validate_unique() const;

 private:
  std::size_t length_;
  std::vector<std::uint32_t> codebook_sizes_;
  std::vector<Token> tokens_;  // item-major, length_ per item
  std::vector<std::uint8_t> present_;
};

/// First n tokens of tok(item); n = 0 gives the empty prefix.
std::vector<Token> prefix(const SemanticIdMap& map, ItemId item, std::size_t n);

/// Probability-like ratio that keeps its raw counts and whether the
/// denominator was non-zero. Undefined ratios carry value 0.
struct CountRatio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  bool defined() const { return denominator > 0; }
  double value() const {
    return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

/// Occurrence counts of prefix pairs at exact hop h, for prefix lengths
/// 1..max_n. Prefixes are interned to dense ids per length.
class PrefixTransitionIndex {
 public:
  /// Aggregates the item-level counts of `items` (hops 1..items.max_hop()).
  /// Throws ValidationError listing training items without tokens.
  static PrefixTransitionIndex build(const Dataset& train, const TransitionIndex& items,
                                     const SemanticIdMap& map, std::size_t max_n);

  std::size_t max_n() const { return max_n_; }
  int max_hop() const { return max_hop_; }

  /// Dense id of pref_n(item), or nullopt for untokenized items.
  std::optional<std::uint32_t> prefix_id(std::size_t n, ItemId item) const;
  std::size_t num_prefixes(std::size_t n) const;

  std::uint64_t count(std::size_t n, int hop, std::uint32_t src, std::uint32_t dst) const;
  std::uint64_t out_total(std::size_t n, int hop, std::uint32_t src) const;
  /// Count of (pref_n(a), pref_n(b)) at the given hop; 0 if either is untokenized.
  std::uint64_t count_items(std::size_t n, int hop, ItemId a, ItemId b) const;

  /// Every stored (src, dst, count) at (n, hop), sorted by (src, dst).
  struct Entry {
    std::uint32_t src;
    std::uint32_t dst;
    std::uint64_t count;
  };
  std::vector<Entry> entries(std::size_t n, int hop) const;

 private:
  struct Cell {
    std::vector<std::uint64_t> keys;  // src << 32 | dst, sorted
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> out_total;  // indexed by src prefix id
  };
  const Cell& cell(std::size_t n, int hop) const;

  std::size_t max_n_ = 0;
  int max_hop_ = 0;
  std::vector<std::vector<std::uint32_t>> prefix_ids_;  // [n-1][item], kNoPrefix if untokenized
  std::vector<std::size_t> num_prefixes_;
  std::vector<Cell> cells_;  // [(n-1) * max_hop + hop-1]
};

/// Smallest k <= min(max_hop, |history|) such that the n-prefixes of
/// (i_{t-k}, i_t) occur as a k-hop training pair.
std::optional<int> prefix_memorizable(const PrefixTransitionIndex& pidx, const Instance& inst,
                                      std::size_t n, int max_hop);

/// Largest n in [1, max_n] with prefix_memorizable, 0 if none.
std::size_t max_memorizable_n(const PrefixTransitionIndex& pidx, const Instance& inst, int max_hop);

/// C_n summed over hops 1..min(max_hop, |history|).
std::uint64_t support(const PrefixTransitionIndex& pidx, const Instance& inst, std::size_t n,
                      int max_hop);

/// Item-level hop-1 transition probability C(i_{t-1} -> i_t) / C(i_{t-1} -> .).
CountRatio phi(const TransitionIndex& index, const Instance& inst);

/// Prefix-level hop-1 transition probability at prefix length n.
CountRatio psi(const PrefixTransitionIndex& pidx, const Instance& inst, std::size_t n);

/// Per-instance max-n bucket plus the share of instances in each bucket.
struct TokenBuckets {
  std::size_t max_n = 0;
  std::vector<std::size_t> per_instance;  // bucket of each instance
  std::vector<std::size_t> counts;        // counts[n] for n in [0, max_n]

  double percent(std::size_t n) const;
};

TokenBuckets token_memorization_buckets(const PrefixTransitionIndex& pidx,
                                        std::span<const Instance> instances, int max_hop,
                                        unsigned threads = 1);

/// Max-n bucket distribution within each attribution category, the data
/// behind a per-category reduction plot. Categories: memorization,
/// generalization (any type), each generalization type at any hop, and
/// uncategorized. Instances may appear under several types.
struct CategoryReduction {
  std::size_t max_n = 0;
  std::vector<std::string> categories;
  std::vector<std::vector<std::size_t>> counts;  // [category][n], n in [0, max_n]
  std::vector<std::size_t> totals;
};

CategoryReduction category_reduction(std::span<const CategoryRecord> records,
                                     const TokenBuckets& buckets);

}  // namespace recmem
