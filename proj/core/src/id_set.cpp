#include "recmem/id_set.hpp"

#include <algorithm>

namespace recmem {

bool set_contains(IdSpan set, ItemId x) { return std::binary_search(set.begin(), set.end(), x); }

std::size_t gallop_lower_bound(IdSpan set, std::size_t from, ItemId x) {
  const std::size_t n = set.size();
  if (from >= n || set[from] >= x) return from;
  // set[lo] < x throughout
  std::size_t lo = from;
  std::size_t step = 1;
  std::size_t hi = from + step;
  while (hi < n && set[hi] < x) {
    lo = hi;
    step <<= 1;
    hi = lo + step;
  }
  hi = std::min(hi, n);
  auto it = std::lower_bound(set.begin() + static_cast<std::ptrdiff_t>(lo + 1),
                             set.begin() + static_cast<std::ptrdiff_t>(hi), x);
  return static_cast<std::size_t>(it - set.begin());
}

std::optional<ItemId> first_common(IdSpan a, IdSpan b, std::optional<ItemId> skip_a,
                                   std::optional<ItemId> skip_b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::size_t pos = 0;
  for (ItemId x : a) {
    pos = gallop_lower_bound(b, pos, x);
    if (pos == b.size()) return std::nullopt;
    if (b[pos] == x && x != skip_a && x != skip_b) return x;
  }
  return std::nullopt;
}

}  // namespace recmem
