#include "recmem/token_lens.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

#include "recmem/error.hpp"
#include "recmem/parallel.hpp"

namespace recmem {

namespace {
constexpr std::uint32_t kNoPrefix = std::numeric_limits<std::uint32_t>::max();

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}
}  // namespace

// ---------------------------------------------------------------- SemanticIdMap

SemanticIdMap::SemanticIdMap(std::size_t length, std::vector<std::uint32_t> codebook_sizes)
    : length_(length), codebook_sizes_(std::move(codebook_sizes)) {
  if (length_ == 0) throw ValidationError("semantic id length must be >= 1");
  if (codebook_sizes_.size() != length_) {
    throw ValidationError(fmt::format("expected {} codebook sizes, got {}", length_,
                                      codebook_sizes_.size()));
  }
}

void SemanticIdMap::assign(ItemId item, std::span<const Token> tokens) {
  if (tokens.size() != length_) {
    throw ValidationError(
        fmt::format("item {} has {} tokens, expected {}", item, tokens.size(), length_));
  }
  for (std::size_t l = 0; l < length_; ++l) {
    if (tokens[l] >= codebook_sizes_[l]) {
      throw ValidationError(fmt::format("item {} token {} at level {} exceeds codebook size {}",
                                        item, tokens[l], l + 1, codebook_sizes_[l]));
    }
  }
  if (item >= present_.size()) {
    present_.resize(static_cast<std::size_t>(item) + 1, 0);
    tokens_.resize(present_.size() * length_, 0);
  }
  std::copy(tokens.begin(), tokens.end(), tokens_.begin() + static_cast<std::ptrdiff_t>(item * length_));
  present_[item] = 1;
}

std::span<const Token> SemanticIdMap::tokens(ItemId item) const {
  if (!has(item)) throw ValidationError(fmt::format("untokenized item {}", item));
  return std::span<const Token>(tokens_).subspan(item * length_, length_);
}

std::vector<ItemId> SemanticIdMap::untokenized(std::size_t num_items) const {
  std::vector<ItemId> out;
  for (ItemId i = 0; i < num_items; ++i) {
    if (!has(i)) out.push_back(i);
  }
  return out;
}

void SemanticIdMap::validate_unique() const {
  std::map<std::vector<Token>, ItemId> seen;
  for (ItemId i = 0; i < present_.size(); ++i) {
    if (!present_[i]) continue;
    auto t = tokens(i);
    auto [it, inserted] = seen.emplace(std::vector<Token>(t.begin(), t.end()), i);
    if (!inserted) {
      throw ValidationError(
          fmt::format("items {} and {} share the semantic id [{}]", it->second, i, fmt::join(t, " ")));
    }
  }
}

std::vector<Token> prefix(const SemanticIdMap& map, ItemId item, std::size_t n) {
  if (n > map.length()) {
    throw ValidationError(fmt::format("prefix length {} exceeds semantic id length {}", n, map.length()));
  }
  if (n == 0) return {};
  auto t = map.tokens(item);
  return {t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n)};
}

// ---------------------------------------------------------------- PrefixTransitionIndex

PrefixTransitionIndex PrefixTransitionIndex::build(const Dataset& train, const TransitionIndex& items,
                                                   const SemanticIdMap& map, std::size_t max_n) {
  if (max_n < 1 || max_n > map.length()) {
    throw ValidationError(fmt::format("max_n must be in [1, {}], got {}", map.length(), max_n));
  }
  std::vector<ItemId> missing;
  {
    std::vector<std::uint8_t> in_train(train.num_items(), 0);
    for (const auto& s : train.sequences) {
      for (ItemId i : s.items) in_train[i] = 1;
    }
    for (ItemId i = 0; i < in_train.size(); ++i) {
      if (in_train[i] && !map.has(i)) missing.push_back(i);
    }
  }
  if (!missing.empty()) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < std::min<std::size_t>(missing.size(), 20); ++j) {
      names.push_back(train.items.raw(missing[j]));
    }
    throw ValidationError(fmt::format("{} training item(s) have no semantic id: {}{}", missing.size(),
                                      fmt::join(names, ", "), missing.size() > 20 ? ", ..." : ""));
  }

  PrefixTransitionIndex p;
  p.max_n_ = max_n;
  p.max_hop_ = items.max_hop();
  const std::size_t num_items = std::max(items.num_items(), train.num_items());

  // Intern prefixes level by level: id_n = intern(id_{n-1}, z_n).
  std::vector<std::uint32_t> parent(num_items, 0);
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::unordered_map<std::uint64_t, std::uint32_t> intern;
    std::vector<std::uint32_t> ids(num_items, kNoPrefix);
    for (ItemId i = 0; i < num_items; ++i) {
      if (!map.has(i)) continue;
      const auto key = pack(parent[i], map.tokens(i)[n - 1]);
      auto [it, inserted] = intern.emplace(key, static_cast<std::uint32_t>(intern.size()));
      ids[i] = it->second;
    }
    p.num_prefixes_.push_back(intern.size());
    parent = ids;
    p.prefix_ids_.push_back(std::move(ids));
  }

  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto& ids = p.prefix_ids_[n - 1];
    for (int h = 1; h <= p.max_hop_; ++h) {
      const Adjacency& rel = items.successor_relation(h);
      std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
      pairs.reserve(rel.nnz());
      for (ItemId r = 0; r < rel.num_rows(); ++r) {
        const IdSpan cols = rel.row(r);
        const auto cnt = rel.row_counts(r);
        for (std::size_t e = 0; e < cols.size(); ++e) {
          pairs.emplace_back(pack(ids[r], ids[cols[e]]), cnt[e]);
        }
      }
      std::sort(pairs.begin(), pairs.end());
      Cell c;
      c.out_total.assign(p.num_prefixes_[n - 1], 0);
      for (const auto& [key, cnt] : pairs) {
        if (!c.keys.empty() && c.keys.back() == key) {
          c.counts.back() += cnt;
        } else {
          c.keys.push_back(key);
          c.counts.push_back(cnt);
        }
        c.out_total[key >> 32] += cnt;
      }
      p.cells_.push_back(std::move(c));
    }
  }
  return p;
}

const PrefixTransitionIndex::Cell& PrefixTransitionIndex::cell(std::size_t n, int hop) const {
  if (n < 1 || n > max_n_) {
    throw ValidationError(fmt::format("prefix length {} outside [1, {}]", n, max_n_));
  }
  if (hop < 1 || hop > max_hop_) {
    throw ValidationError(fmt::format("hop {} outside [1, {}]", hop, max_hop_));
  }
  return cells_[(n - 1) * static_cast<std::size_t>(max_hop_) + static_cast<std::size_t>(hop - 1)];
}

std::optional<std::uint32_t> PrefixTransitionIndex::prefix_id(std::size_t n, ItemId item) const {
  if (n < 1 || n > max_n_) {
    throw ValidationError(fmt::format("prefix length {} outside [1, {}]", n, max_n_));
  }
  const auto& ids = prefix_ids_[n - 1];
  if (item >= ids.size() || ids[item] == kNoPrefix) return std::nullopt;
  return ids[item];
}

std::size_t PrefixTransitionIndex::num_prefixes(std::size_t n) const {
  cell(n, 1);
  return num_prefixes_[n - 1];
}

std::uint64_t PrefixTransitionIndex::count(std::size_t n, int hop, std::uint32_t src,
                                           std::uint32_t dst) const {
  const Cell& c = cell(n, hop);
  const auto key = pack(src, dst);
  auto it = std::lower_bound(c.keys.begin(), c.keys.end(), key);
  if (it == c.keys.end() || *it != key) return 0;
  return c.counts[static_cast<std::size_t>(it - c.keys.begin())];
}

std::uint64_t PrefixTransitionIndex::out_total(std::size_t n, int hop, std::uint32_t src) const {
  const Cell& c = cell(n, hop);
  return src < c.out_total.size() ? c.out_total[src] : 0;
}

std::uint64_t PrefixTransitionIndex::count_items(std::size_t n, int hop, ItemId a, ItemId b) const {
  const auto pa = prefix_id(n, a);
  const auto pb = prefix_id(n, b);
  if (!pa || !pb) return 0;
  return count(n, hop, *pa, *pb);
}

std::vector<PrefixTransitionIndex::Entry> PrefixTransitionIndex::entries(std::size_t n, int hop) const {
  const Cell& c = cell(n, hop);
  std::vector<Entry> out;
  out.reserve(c.keys.size());
  for (std::size_t i = 0; i < c.keys.size(); ++i) {
    out.push_back({static_cast<std::uint32_t>(c.keys[i] >> 32),
                   static_cast<std::uint32_t>(c.keys[i] & 0xffffffffULL), c.counts[i]});
  }
  return out;
}

// ---------------------------------------------------------------- queries

namespace {
int hop_limit(const Instance& inst, int max_hop) {
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(0, max_hop)),
                                                inst.history.size()));
}
}  // namespace

std::optional<int> prefix_memorizable(const PrefixTransitionIndex& pidx, const Instance& inst,
                                      std::size_t n, int max_hop) {
  const int limit = hop_limit(inst, std::min(max_hop, pidx.max_hop()));
  const auto target = pidx.prefix_id(n, inst.target);
  if (!target) return std::nullopt;
  for (int k = 1; k <= limit; ++k) {
    const auto source = pidx.prefix_id(n, inst.back(static_cast<std::size_t>(k)));
    if (source && pidx.count(n, k, *source, *target) > 0) return k;
  }
  return std::nullopt;
}

std::size_t max_memorizable_n(const PrefixTransitionIndex& pidx, const Instance& inst, int max_hop) {
  for (std::size_t n = pidx.max_n(); n >= 1; --n) {
    if (prefix_memorizable(pidx, inst, n, max_hop)) return n;
  }
  return 0;
}

std::uint64_t support(const PrefixTransitionIndex& pidx, const Instance& inst, std::size_t n,
                      int max_hop) {
  const int limit = hop_limit(inst, std::min(max_hop, pidx.max_hop()));
  std::uint64_t total = 0;
  for (int k = 1; k <= limit; ++k) {
    total += pidx.count_items(n, k, inst.back(static_cast<std::size_t>(k)), inst.target);
  }
  return total;
}

CountRatio phi(const TransitionIndex& index, const Instance& inst) {
  if (inst.history.empty()) return {};
  const ItemId source = inst.back(1);
  return {index.count(source, inst.target, 1), index.out_total(source, 1)};
}

CountRatio psi(const PrefixTransitionIndex& pidx, const Instance& inst, std::size_t n) {
  if (inst.history.empty()) return {};
  const auto source = pidx.prefix_id(n, inst.back(1));
  if (!source) return {};
  const auto target = pidx.prefix_id(n, inst.target);
  const std::uint64_t num = target ? pidx.count(n, 1, *source, *target) : 0;
  return {num, pidx.out_total(n, 1, *source)};
}

double TokenBuckets::percent(std::size_t n) const {
  if (per_instance.empty() || n >= counts.size()) return 0.0;
  return 100.0 * static_cast<double>(counts[n]) / static_cast<double>(per_instance.size());
}

TokenBuckets token_memorization_buckets(const PrefixTransitionIndex& pidx,
                                        std::span<const Instance> instances, int max_hop,
                                        unsigned threads) {
  TokenBuckets b;
  b.max_n = pidx.max_n();
  b.per_instance.resize(instances.size());
  parallel_for_chunks(instances.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      b.per_instance[i] = max_memorizable_n(pidx, instances[i], max_hop);
    }
  });
  b.counts.assign(b.max_n + 1, 0);
  for (std::size_t n : b.per_instance) ++b.counts[n];
  return b;
}

CategoryReduction category_reduction(std::span<const CategoryRecord> records,
                                     const TokenBuckets& buckets) {
  if (records.size() != buckets.per_instance.size()) {
    throw ValidationError(fmt::format("{} labels for {} bucketed instances", records.size(),
                                      buckets.per_instance.size()));
  }
  CategoryReduction r;
  r.max_n = buckets.max_n;
  r.categories = {"memorization",  "generalization", "substitutability", "symmetry",
                  "transitivity",  "second_symmetry", "uncategorized"};
  r.counts.assign(r.categories.size(), std::vector<std::size_t>(r.max_n + 1, 0));
  r.totals.assign(r.categories.size(), 0);
  auto credit = [&](std::size_t c, std::size_t n) {
    ++r.counts[c][n];
    ++r.totals[c];
  };
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const std::size_t n = buckets.per_instance[i];
    if (rec.memorization) {
      credit(0, n);
      continue;
    }
    if (!rec.generalization()) {
      credit(6, n);
      continue;
    }
    credit(1, n);
    if (rec.substitutability_hop) credit(2, n);
    if (rec.symmetry_hop) credit(3, n);
    if (rec.transitivity_hop) credit(4, n);
    if (rec.second_symmetry_hop) credit(5, n);
  }
  return r;
}

}  // namespace recmem
