#pragma once

// Small hand-written corpora for the unit tests. Items and users are named by
// strings; unseen history or target items are interned after the training
// sequences, so they get ids no training sequence uses.

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "recmem/domain.hpp"

namespace recmem::testing {

struct Fixture {
  Dataset train;

  ItemId id(std::string_view item) { return train.items.intern(item); }

  Instance inst(std::initializer_list<std::string_view> history, std::string_view target) {
    Instance out;
    out.user = train.users.intern("test-user-" + std::to_string(next_user_++));
    for (auto h : history) out.history.push_back(id(h));
    out.target = id(target);
    return out;
  }

 private:
  int next_user_ = 0;
};

inline Fixture fixture(std::initializer_list<std::initializer_list<std::string_view>> seqs) {
  Fixture f;
  int n = 0;
  for (const auto& seq : seqs) {
    Sequence s;
    s.user = f.train.users.intern("train-user-" + std::to_string(n++));
    for (auto item : seq) s.items.push_back(f.train.items.intern(item));
    f.train.sequences.push_back(std::move(s));
  }
  return f;
}

/// Raw item strings of a sequence of ids.
inline std::vector<std::string> names(const Dataset& d, const std::vector<ItemId>& ids) {
  std::vector<std::string> out;
  for (auto i : ids) out.push_back(d.items.raw(i));
  return out;
}

}  // namespace recmem::testing
