#include "recmem/transition_index.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "recmem/error.hpp"
#include "recmem/parallel.hpp"

namespace recmem {

// ---------------------------------------------------------------- Adjacency

Adjacency::Adjacency(std::vector<std::uint64_t> offsets, std::vector<ItemId> targets,
                     std::vector<std::uint32_t> counts)
    : offsets_(std::move(offsets)), targets_(std::move(targets)), counts_(std::move(counts)) {}

IdSpan Adjacency::row(ItemId r) const {
  if (r >= num_rows()) return {};
  return IdSpan(targets_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
}

std::span<const std::uint32_t> Adjacency::row_counts(ItemId r) const {
  if (r >= num_rows() || counts_.empty()) return {};
  return std::span<const std::uint32_t>(counts_).subspan(offsets_[r], offsets_[r + 1] - offsets_[r]);
}

std::uint32_t Adjacency::count(ItemId r, ItemId c) const {
  const IdSpan cols = row(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0;
  if (counts_.empty()) return 1;
  return counts_[offsets_[r] + static_cast<std::size_t>(it - cols.begin())];
}

Adjacency Adjacency::transpose(std::size_t rows) const {
  std::vector<std::uint64_t> offsets(rows + 1, 0);
  for (ItemId c : targets_) ++offsets[c + 1];
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];

  std::vector<ItemId> targets(targets_.size());
  std::vector<std::uint32_t> counts(counts_.empty() ? 0 : counts_.size());
  std::vector<std::uint64_t> cursor(offsets.begin(), offsets.end() - 1);
  // Walking source rows in increasing order keeps each output row sorted.
  for (std::size_t r = 0; r < num_rows(); ++r) {
    for (std::uint64_t e = offsets_[r]; e < offsets_[r + 1]; ++e) {
      const auto slot = cursor[targets_[e]]++;
      targets[slot] = static_cast<ItemId>(r);
      if (!counts_.empty()) counts[slot] = counts_[e];
    }
  }
  return Adjacency(std::move(offsets), std::move(targets), std::move(counts));
}

// ---------------------------------------------------------------- build

namespace {

struct RowBuffer {
  // (row << 32 | col) for rows owned by one worker.
  std::vector<std::uint64_t> packed;
};

std::uint64_t pack(ItemId row, ItemId col) {
  return (static_cast<std::uint64_t>(row) << 32) | col;
}

// Sorts a worker's packed pairs and run-length encodes duplicates.
void compact(std::vector<std::uint64_t>& packed, std::vector<std::uint32_t>& runs, bool keep_counts) {
  std::sort(packed.begin(), packed.end());
  std::size_t w = 0;
  runs.clear();
  for (std::size_t i = 0; i < packed.size();) {
    std::size_t j = i + 1;
    while (j < packed.size() && packed[j] == packed[i]) ++j;
    packed[w++] = packed[i];
    if (keep_counts) runs.push_back(static_cast<std::uint32_t>(j - i));
    i = j;
  }
  packed.resize(w);
}

// Assembles CSR rows from per-worker compacted buffers. Worker w owns the
// rows r with r % workers == w.
Adjacency assemble(std::size_t rows, std::vector<std::vector<std::uint64_t>>& parts,
                   std::vector<std::vector<std::uint32_t>>& runs, bool keep_counts,
                   unsigned threads) {
  std::vector<std::uint64_t> offsets(rows + 1, 0);
  for (const auto& part : parts) {
    for (std::uint64_t p : part) ++offsets[(p >> 32) + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];

  std::vector<ItemId> targets(offsets[rows]);
  std::vector<std::uint32_t> counts(keep_counts ? offsets[rows] : 0);
  parallel_for_chunks(parts.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      const auto& part = parts[w];
      std::uint64_t prev_row = ~0ULL;
      std::uint64_t slot = 0;
      for (std::size_t i = 0; i < part.size(); ++i) {
        const std::uint64_t row = part[i] >> 32;
        if (row != prev_row) {
          slot = offsets[row];
          prev_row = row;
        }
        targets[slot] = static_cast<ItemId>(part[i] & 0xffffffffULL);
        if (keep_counts) counts[slot] = runs[w][i];
        ++slot;
      }
    }
  });
  return Adjacency(std::move(offsets), std::move(targets), std::move(counts));
}

}  // namespace

TransitionIndex TransitionIndex::build(const Dataset& train, int max_hop, unsigned threads) {
  if (max_hop < 1) throw ValidationError(fmt::format("max_hop must be >= 1, got {}", max_hop));
  threads = std::max(1U, threads);

  TransitionIndex idx;
  idx.max_hop_ = max_hop;
  idx.num_items_ = train.num_items();
  const auto hops = static_cast<std::size_t>(max_hop);
  // Relations: [0, hops) exact succ, [hops, 2*hops) exact pred, then any succ, any pred.
  const std::size_t num_rel = 2 * hops + 2;
  const std::size_t any_s = 2 * hops;
  const std::size_t any_p = 2 * hops + 1;

  std::vector<std::vector<std::vector<std::uint64_t>>> parts(
      num_rel, std::vector<std::vector<std::uint64_t>>(threads));
  std::vector<std::vector<std::vector<std::uint32_t>>> runs(
      num_rel, std::vector<std::vector<std::uint32_t>>(threads));

  parallel_for_chunks(threads, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      for (const auto& seq : train.sequences) {
        const auto& items = seq.items;
        for (std::size_t p = 0; p < items.size(); ++p) {
          const ItemId src = items[p];
          const bool own_src = src % threads == w;
          for (std::size_t q = p + 1; q < items.size(); ++q) {
            const ItemId dst = items[q];
            const bool own_dst = dst % threads == w;
            const std::size_t gap = q - p;
            if (own_src) {
              if (gap <= hops) parts[gap - 1][w].push_back(pack(src, dst));
              parts[any_s][w].push_back(pack(src, dst));
            }
            if (own_dst) {
              if (gap <= hops) parts[hops + gap - 1][w].push_back(pack(dst, src));
              parts[any_p][w].push_back(pack(dst, src));
            }
          }
        }
      }
      for (std::size_t r = 0; r < num_rel; ++r) {
        compact(parts[r][w], runs[r][w], r < hops);
      }
    }
  });

  const std::size_t rows = idx.num_items_;
  for (std::size_t h = 0; h < hops; ++h) {
    idx.succ_.push_back(assemble(rows, parts[h], runs[h], true, threads));
    idx.pred_.push_back(assemble(rows, parts[hops + h], runs[hops + h], false, threads));
  }
  idx.any_succ_ = assemble(rows, parts[any_s], runs[any_s], false, threads);
  idx.any_pred_ = assemble(rows, parts[any_p], runs[any_p], false, threads);

  idx.out_total_.assign(hops, std::vector<std::uint64_t>(rows, 0));
  for (std::size_t h = 0; h < hops; ++h) {
    for (ItemId r = 0; r < rows; ++r) {
      for (std::uint32_t c : idx.succ_[h].row_counts(r)) idx.out_total_[h][r] += c;
    }
  }
  return idx;
}

const Adjacency& TransitionIndex::relation(const std::vector<Adjacency>& rel, int hop) const {
  if (hop < 1 || hop > max_hop_) {
    throw ValidationError(fmt::format("hop {} outside indexed range [1, {}]", hop, max_hop_));
  }
  return rel[static_cast<std::size_t>(hop - 1)];
}

bool TransitionIndex::contains(const TransitionQuery& q) const {
  return relation(succ_, q.hop).contains(q.source, q.dest);
}

std::uint32_t TransitionIndex::count(ItemId source, ItemId dest, int hop) const {
  return relation(succ_, hop).count(source, dest);
}

std::uint64_t TransitionIndex::out_total(ItemId source, int hop) const {
  relation(succ_, hop);
  const auto& totals = out_total_[static_cast<std::size_t>(hop - 1)];
  return source < totals.size() ? totals[source] : 0;
}

void TransitionIndex::finish_derived() {
  pred_.clear();
  out_total_.clear();
  for (const auto& s : succ_) {
    Adjacency t = s.transpose(num_items_);
    pred_.emplace_back(t.offsets(), t.targets(), std::vector<std::uint32_t>{});
    std::vector<std::uint64_t> totals(num_items_, 0);
    for (ItemId r = 0; r < num_items_; ++r) {
      for (std::uint32_t c : s.row_counts(r)) totals[r] += c;
    }
    out_total_.push_back(std::move(totals));
  }
  any_pred_ = any_succ_.transpose(num_items_);
}

// ---------------------------------------------------------------- on-disk cache
//
// "TLIDX" <version:u8> <max_hop:u32> <num_items:u32>
// then for each hop 1..max_hop the successor relation with counts, then the
// any-gap successor relation without counts. A relation is
//   <nnz:u32> <row_len:u32 x num_items> <targets:u32 x nnz> [<counts:u32 x nnz>]
// All integers little-endian. Predecessor relations are rebuilt on load.

namespace {

constexpr std::array<char, 5> kMagic = {'T', 'L', 'I', 'D', 'X'};

void put_u32(std::ostream& out, std::uint64_t v) {
  if (v > 0xffffffffULL) throw ValidationError("value exceeds 32-bit cache field");
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw ValidationError("transition index cache is truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_relation(std::ostream& out, const Adjacency& rel, bool with_counts) {
  put_u32(out, rel.nnz());
  for (std::size_t r = 0; r < rel.num_rows(); ++r) {
    put_u32(out, rel.offsets()[r + 1] - rel.offsets()[r]);
  }
  for (ItemId t : rel.targets()) put_u32(out, t);
  if (with_counts) {
    for (std::uint32_t c : rel.counts()) put_u32(out, c);
  }
}

Adjacency get_relation(std::istream& in, std::size_t rows, bool with_counts) {
  const std::uint32_t nnz = get_u32(in);
  std::vector<std::uint64_t> offsets(rows + 1, 0);
  for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] = offsets[r] + get_u32(in);
  if (offsets[rows] != nnz) throw ValidationError("transition index cache row lengths disagree with nnz");
  std::vector<ItemId> targets(nnz);
  for (auto& t : targets) {
    t = get_u32(in);
    if (t >= rows) throw ValidationError("transition index cache references an out-of-range item");
  }
  std::vector<std::uint32_t> counts;
  if (with_counts) {
    counts.resize(nnz);
    for (auto& c : counts) c = get_u32(in);
  }
  return Adjacency(std::move(offsets), std::move(targets), std::move(counts));
}

}  // namespace

void TransitionIndex::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  out.put(static_cast<char>(kFormatVersion));
  put_u32(out, static_cast<std::uint64_t>(max_hop_));
  put_u32(out, num_items_);
  for (const auto& s : succ_) put_relation(out, s, true);
  put_relation(out, any_succ_, false);
  if (!out) throw IoError("failed writing transition index cache");
}

void TransitionIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  save(out);
}

TransitionIndex TransitionIndex::load(std::istream& in) {
  std::array<char, 5> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ValidationError("not a transition index cache (bad magic)");
  const int version = in.get();
  if (version != kFormatVersion) {
    throw ValidationError(fmt::format("transition index cache version {} unsupported (expected {})",
                                      version, kFormatVersion));
  }
  TransitionIndex idx;
  idx.max_hop_ = static_cast<int>(get_u32(in));
  idx.num_items_ = get_u32(in);
  if (idx.max_hop_ < 1) throw ValidationError("transition index cache has max_hop < 1");
  for (int h = 0; h < idx.max_hop_; ++h) {
    idx.succ_.push_back(get_relation(in, idx.num_items_, true));
  }
  idx.any_succ_ = get_relation(in, idx.num_items_, false);
  idx.finish_derived();
  return idx;
}

TransitionIndex TransitionIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return load(in);
}

}  // namespace recmem
