#pragma once

// Sorted, duplicate-free item-id sets stored as spans into CSR rows, with
// galloping intersection.

#include <optional>
#include <span>

#include "recmem/domain.hpp"

namespace recmem {

using IdSpan = std::span<const ItemId>;

bool set_contains(IdSpan set, ItemId x);

/// Index of the first element >= x at or after `from`, found by exponential
/// probing followed by binary search. Returns set.size() if none.
std::size_t gallop_lower_bound(IdSpan set, std::size_t from, ItemId x);

/// Smallest element common to both sets, skipping `skip_a` and `skip_b`.
/// The smaller set drives; the larger is galloped.
std::optional<ItemId> first_common(IdSpan a, IdSpan b,
                                   std::optional<ItemId> skip_a = std::nullopt,
                                   std::optional<ItemId> skip_b = std::nullopt);

inline std::optional<ItemId> intersect_nonempty(IdSpan a, IdSpan b) { return first_common(a, b); }

}  // namespace recmem
