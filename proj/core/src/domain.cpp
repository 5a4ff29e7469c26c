#include "recmem/domain.hpp"

#include <fmt/format.h>

#include "recmem/error.hpp"

namespace recmem {

std::uint32_t IdDictionary::intern(std::string_view raw) {
  if (auto it = index_.find(raw); it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(raw_.size());
  raw_.emplace_back(raw);
  index_.emplace(raw_.back(), id);
  return id;
}

std::optional<std::uint32_t> IdDictionary::find(std::string_view raw) const {
  if (auto it = index_.find(raw); it != index_.end()) return it->second;
  return std::nullopt;
}

const std::string& IdDictionary::raw(std::uint32_t index) const {
  if (index >= raw_.size()) {
    throw ValidationError(fmt::format("id index {} out of range (size {})", index, raw_.size()));
  }
  return raw_[index];
}

std::size_t Dataset::num_interactions() const {
  std::size_t total = 0;
  for (const auto& s : sequences) total += s.items.size();
  return total;
}

void Dataset::validate() const {
  const auto n = items.size();
  for (const auto& s : sequences) {
    if (s.items.empty()) {
      throw ValidationError(fmt::format("empty sequence for user index {}", s.user));
    }
    for (ItemId item : s.items) {
      if (item >= n) {
        throw ValidationError(
            fmt::format("item index {} out of range for dictionary of size {}", item, n));
      }
    }
  }
}

SplitResult make_instances(const Dataset& dataset) {
  if (dataset.sequences.empty()) throw ValidationError("no sequences");

  SplitResult out;
  out.train.items = dataset.items;
  out.train.users = dataset.users;
  out.train.sequences.reserve(dataset.sequences.size());

  for (const auto& seq : dataset.sequences) {
    const auto& items = seq.items;
    if (items.size() < 3) {
      out.train.sequences.push_back(seq);
      continue;
    }
    const auto n = items.size();
    Sequence train{seq.user, {items.begin(), items.end() - 2}};
    out.validation.push_back({seq.user, train.items, items[n - 2]});
    out.test.push_back({seq.user, {items.begin(), items.end() - 1}, items[n - 1]});
    out.train.sequences.push_back(std::move(train));
  }
  return out;
}

}  // namespace recmem
