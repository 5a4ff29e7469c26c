#pragma once

// Core data model: dense item/user ids, user sequences, prediction instances
// and the leave-last-out split.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recmem {

using ItemId = std::uint32_t;
using UserId = std::uint32_t;

/// Bidirectional raw-string <-> dense index map. Indices are handed out in
/// first-appearance order.
class IdDictionary {
 public:
  /// Returns the existing index for `raw` or assigns the next one.
  std::uint32_t intern(std::string_view raw);

  std::optional<std::uint32_t> find(std::string_view raw) const;
  const std::string& raw(std::uint32_t index) const;

  std::size_t size() const { return raw_.size(); }
  bool empty() const { return raw_.empty(); }
  const std::vector<std::string>& raw_ids() const { return raw_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct Sequence {
  UserId user = 0;
  std::vector<ItemId> items;
};

struct Dataset {
  std::vector<Sequence> sequences;
  IdDictionary items;
  IdDictionary users;

  std::size_t num_items() const { return items.size(); }
  std::size_t num_interactions() const;

  /// Throws ValidationError if a sequence is empty or references an item
  /// outside the dictionary.
  void validate() const;
};

/// One prediction task: given `history`, predict `target`.
struct Instance {
  UserId user = 0;
  std::vector<ItemId> history;
  ItemId target = 0;

  /// Item at i_{t-k}, 1-based hop from the target. Requires 1 <= k <= |history|.
  ItemId back(std::size_t k) const { return history[history.size() - k]; }
};

/// Directed item pair at a positional gap.
struct TransitionQuery {
  ItemId source = 0;
  ItemId dest = 0;
  int hop = 1;
};

struct SplitResult {
  Dataset train;  // shares the full item/user dictionaries
  std::vector<Instance> validation;
  std::vector<Instance> test;
};

/// Leave-last-out split. Sequences of length >= 3 yield one validation and
/// one test instance; shorter sequences go to training whole.
/// Throws ValidationError("no sequences") for an empty dataset.
SplitResult make_instances(const Dataset& dataset);

}  // namespace recmem
