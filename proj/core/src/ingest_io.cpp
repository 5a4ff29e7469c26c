#include "recmem/ingest_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "recmem/error.hpp"

namespace recmem {

namespace {

constexpr std::string_view kInteractionsHeader = "user\titems";
constexpr std::string_view kInstancesHeader = "user\thistory\ttarget";
constexpr std::string_view kPredictionsHeader = "user\tpredictions";
constexpr std::string_view kSidHeader = "item\ttokens";
constexpr std::string_view kLabelsHeader =
    "user\ttarget\tmem\tsubst_hop\tsym_hop\ttrans_hop\tsecond_sym_hop\tsecond_sym_kind\tuncategorized";

/// Yields data lines (comments and blanks skipped, '\r' stripped) with their
/// 1-based line numbers; drops a leading header equal to `header`.
class LineReader {
 public:
  LineReader(std::istream& in, std::string_view source, std::string_view header)
      : in_(in), source_(source), header_(header) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      if (first_ && line == header_) {
        first_ = false;
        continue;
      }
      first_ = false;
      return true;
    }
    if (in_.bad()) throw IoError(fmt::format("{}: read failure", source_));
    return false;
  }

  [[noreturn]] void fail(std::string_view what) const {
    throw ValidationError(fmt::format("{}:{}: {}", source_, line_no_, what));
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string_view source_;
  std::string_view header_;
  std::size_t line_no_ = 0;
  bool first_ = true;
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<ItemId> parse_item_list(std::string_view field, IdDictionary& items,
                                    const LineReader& reader) {
  std::vector<ItemId> out;
  if (field.empty()) return out;
  for (auto tok : split(field, ',')) {
    if (tok.empty()) reader.fail("empty item id");
    out.push_back(items.intern(tok));
  }
  return out;
}

std::optional<int> parse_hop(std::string_view s, const LineReader& reader) {
  if (s == "-") return std::nullopt;
  int v = 0;
  if (!parse_number(s, v) || v < 1) reader.fail(fmt::format("bad hop '{}'", s));
  return v;
}

bool parse_flag(std::string_view s, const LineReader& reader) {
  if (s == "1") return true;
  if (s == "0") return false;
  reader.fail(fmt::format("bad flag '{}' (expected 0 or 1)", s));
}

std::string hop_field(const std::optional<int>& h) { return h ? std::to_string(*h) : "-"; }

}  // namespace

DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  s.users = d.sequences.size();
  s.items = d.num_items();
  s.interactions = d.num_interactions();
  s.avg_length = s.users == 0 ? 0.0 : static_cast<double>(s.interactions) / static_cast<double>(s.users);
  return s;
}

std::vector<RawSequence> kcore_filter(std::vector<RawSequence> seqs, std::size_t k) {
  if (k <= 1) return seqs;
  while (true) {
    std::unordered_map<std::string, std::size_t> item_count;
    for (const auto& s : seqs) {
      for (const auto& i : s.items) ++item_count[i];
    }
    bool changed = false;
    std::vector<RawSequence> kept;
    kept.reserve(seqs.size());
    for (auto& s : seqs) {
      const auto before = s.items.size();
      std::erase_if(s.items, [&](const std::string& i) { return item_count[i] < k; });
      if (s.items.size() != before) changed = true;
      if (s.items.size() < k) {
        changed = true;
        continue;
      }
      kept.push_back(std::move(s));
    }
    seqs = std::move(kept);
    if (!changed) return seqs;
  }
}

Dataset build_dataset(const std::vector<RawSequence>& seqs) {
  Dataset d;
  d.sequences.reserve(seqs.size());
  for (const auto& s : seqs) {
    Sequence out;
    out.user = d.users.intern(s.user);
    out.items.reserve(s.items.size());
    for (const auto& i : s.items) out.items.push_back(d.items.intern(i));
    d.sequences.push_back(std::move(out));
  }
  return d;
}

std::vector<RawSequence> parse_raw_interactions(std::istream& in, std::string_view source) {
  LineReader reader(in, source, kInteractionsHeader);
  std::vector<RawSequence> out;
  std::unordered_set<std::string> seen_users;
  std::string line;
  while (reader.next(line)) {
    const auto fields = split(line, '\t');
    if (fields.size() != 2) reader.fail(fmt::format("expected 2 tab-separated fields, got {}", fields.size()));
    if (fields[0].empty()) reader.fail("empty user id");
    if (fields[1].empty()) reader.fail("empty item sequence");
    RawSequence s;
    s.user = std::string(fields[0]);
    if (!seen_users.insert(s.user).second) reader.fail(fmt::format("duplicate user '{}'", s.user));
    for (auto tok : split(fields[1], ',')) {
      if (tok.empty()) reader.fail("empty item id");
      s.items.emplace_back(tok);
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ValidationError(fmt::format("{}: empty interactions file", source));
  return out;
}

namespace {

// Without a k-core filter the raw strings are never needed again, so tokens
// go straight into the dictionaries. Ids and errors match build_dataset over
// parse_raw_interactions.
Dataset parse_interactions_direct(std::istream& in, std::string_view source) {
  LineReader reader(in, source, kInteractionsHeader);
  Dataset d;
  std::string line;
  std::vector<std::string_view> fields;
  while (reader.next(line)) {
    fields = split(line, '\t');
    if (fields.size() != 2) reader.fail(fmt::format("expected 2 tab-separated fields, got {}", fields.size()));
    if (fields[0].empty()) reader.fail("empty user id");
    if (fields[1].empty()) reader.fail("empty item sequence");
    const std::size_t users_before = d.users.size();
    Sequence s;
    s.user = d.users.intern(fields[0]);
    if (d.users.size() == users_before) reader.fail(fmt::format("duplicate user '{}'", fields[0]));
    std::string_view rest = fields[1];
    while (true) {
      const auto comma = rest.find(',');
      const auto tok = rest.substr(0, comma);
      if (tok.empty()) reader.fail("empty item id");
      s.items.push_back(d.items.intern(tok));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    d.sequences.push_back(std::move(s));
  }
  if (d.sequences.empty()) throw ValidationError(fmt::format("{}: empty interactions file", source));
  return d;
}

}  // namespace

Dataset parse_interactions(std::istream& in, std::optional<std::size_t> kcore, std::string_view source) {
  if (!kcore) return parse_interactions_direct(in, source);
  auto raw = parse_raw_interactions(in, source);
  if (kcore) {
    raw = kcore_filter(std::move(raw), *kcore);
    if (raw.empty()) {
      throw ValidationError(fmt::format("{}: nothing left after {}-core filtering", source, *kcore));
    }
  }
  return build_dataset(raw);
}

Dataset read_interactions(const std::filesystem::path& path, std::optional<std::size_t> kcore) {
  auto in = open_in(path);
  return parse_interactions(in, kcore, path.string());
}

void write_interactions(std::ostream& out, const Dataset& d) {
  out << kInteractionsHeader << '\n';
  for (const auto& s : d.sequences) {
    out << d.users.raw(s.user) << '\t';
    for (std::size_t i = 0; i < s.items.size(); ++i) out << (i ? "," : "") << d.items.raw(s.items[i]);
    out << '\n';
  }
}

void write_interactions(const std::filesystem::path& path, const Dataset& d) {
  auto out = open_out(path);
  write_interactions(out, d);
  finish(out, path);
}

std::vector<RawSequence> parse_timestamped(std::istream& in, std::string_view source) {
  LineReader reader(in, source, "user\titem\ttimestamp");
  struct Event {
    double ts;
    std::size_t order;
    std::string item;
  };
  std::vector<std::string> user_order;
  std::unordered_map<std::string, std::vector<Event>> events;
  std::size_t order = 0;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 3) reader.fail(fmt::format("expected 3 tab-separated fields, got {}", f.size()));
    if (f[0].empty() || f[1].empty()) reader.fail("empty user or item id");
    double ts = 0.0;
    if (!parse_number(f[2], ts)) reader.fail(fmt::format("bad timestamp '{}'", f[2]));
    auto [it, fresh] = events.try_emplace(std::string(f[0]));
    if (fresh) user_order.push_back(it->first);
    it->second.push_back({ts, order++, std::string(f[1])});
  }
  if (user_order.empty()) throw ValidationError(fmt::format("{}: empty interactions file", source));
  std::vector<RawSequence> out;
  for (const auto& u : user_order) {
    auto& ev = events[u];
    std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
    RawSequence s{u, {}};
    for (auto& e : ev) s.items.push_back(std::move(e.item));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- instances

std::vector<Instance> parse_instances(std::istream& in, IdDictionary& items, IdDictionary& users,
                                      std::string_view source) {
  LineReader reader(in, source, kInstancesHeader);
  std::vector<Instance> out;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 3) reader.fail(fmt::format("expected 3 tab-separated fields, got {}", f.size()));
    if (f[0].empty()) reader.fail("empty user id");
    if (f[2].empty()) reader.fail("empty target");
    Instance inst;
    inst.user = users.intern(f[0]);
    inst.history = parse_item_list(f[1], items, reader);
    if (inst.history.empty()) reader.fail("empty history");
    inst.target = items.intern(f[2]);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Instance> read_instances(const std::filesystem::path& path, IdDictionary& items,
                                     IdDictionary& users) {
  auto in = open_in(path);
  return parse_instances(in, items, users, path.string());
}

void write_instances(std::ostream& out, std::span<const Instance> instances,
                     const IdDictionary& items, const IdDictionary& users) {
  out << kInstancesHeader << '\n';
  for (const auto& inst : instances) {
    out << users.raw(inst.user) << '\t';
    for (std::size_t i = 0; i < inst.history.size(); ++i) out << (i ? "," : "") << items.raw(inst.history[i]);
    out << '\t' << items.raw(inst.target) << '\n';
  }
}

void write_instances(const std::filesystem::path& path, std::span<const Instance> instances,
                     const IdDictionary& items, const IdDictionary& users) {
  auto out = open_out(path);
  write_instances(out, instances, items, users);
  finish(out, path);
}

// ---------------------------------------------------------------- predictions

std::vector<PredictionList> parse_predictions(std::istream& in, const IdDictionary& items,
                                              const IdDictionary& users, bool expect_probability,
                                              std::string_view source) {
  LineReader reader(in, source, kPredictionsHeader);
  std::vector<PredictionList> out;
  std::unordered_set<UserId> seen_users;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 2) reader.fail(fmt::format("expected 2 tab-separated fields, got {}", f.size()));
    const auto user = users.find(f[0]);
    if (!user) reader.fail(fmt::format("unknown user '{}'", f[0]));
    if (!seen_users.insert(*user).second) reader.fail(fmt::format("duplicate user '{}'", f[0]));
    PredictionList p;
    p.user = *user;
    p.is_probability = expect_probability;
    if (!f[1].empty()) {
      for (auto tok : split(f[1], ',')) {
        const auto colon = tok.rfind(':');
        if (colon == std::string_view::npos) reader.fail(fmt::format("expected item:score, got '{}'", tok));
        const auto raw_item = tok.substr(0, colon);
        const auto item = items.find(raw_item);
        if (!item) reader.fail(fmt::format("unknown item '{}'", raw_item));
        double score = 0.0;
        if (!parse_number(tok.substr(colon + 1), score)) {
          reader.fail(fmt::format("bad score '{}'", tok.substr(colon + 1)));
        }
        p.ranked.push_back({*item, score});
      }
    }
    try {
      p.validate();
    } catch (const ValidationError& e) {
      reader.fail(e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PredictionList> read_predictions(const std::filesystem::path& path,
                                             const IdDictionary& items, const IdDictionary& users,
                                             bool expect_probability) {
  auto in = open_in(path);
  return parse_predictions(in, items, users, expect_probability, path.string());
}

void write_predictions(std::ostream& out, std::span<const PredictionList> preds,
                       const IdDictionary& items, const IdDictionary& users) {
  out << kPredictionsHeader << '\n';
  for (const auto& p : preds) {
    out << users.raw(p.user) << '\t';
    for (std::size_t i = 0; i < p.ranked.size(); ++i) {
      // Shortest round-trip representation keeps parse(write(x)) == x.
      out << (i ? "," : "") << items.raw(p.ranked[i].item) << ':' << fmt::format("{}", p.ranked[i].score);
    }
    out << '\n';
  }
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionList> preds,
                       const IdDictionary& items, const IdDictionary& users) {
  auto out = open_out(path);
  write_predictions(out, preds, items, users);
  finish(out, path);
}

std::vector<PredictionList> align_predictions(std::span<const PredictionList> preds,
                                              std::span<const Instance> instances,
                                              std::string_view model) {
  std::unordered_map<UserId, std::size_t> by_user;
  for (std::size_t i = 0; i < preds.size(); ++i) by_user.emplace(preds[i].user, i);
  std::vector<PredictionList> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    auto it = by_user.find(inst.user);
    if (it == by_user.end()) {
      throw ValidationError(fmt::format("{}: no predictions for user index {}", model, inst.user));
    }
    out.push_back(preds[it->second]);
  }
  return out;
}

// ---------------------------------------------------------------- labels

void write_labels(std::ostream& out, std::span<const Instance> instances,
                  std::span<const CategoryRecord> records, const IdDictionary& items,
                  const IdDictionary& users) {
  if (instances.size() != records.size()) {
    throw ValidationError(fmt::format("{} labels for {} instances", records.size(), instances.size()));
  }
  out << kLabelsHeader << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << users.raw(instances[i].user) << '\t' << items.raw(instances[i].target) << '\t'
        << (r.memorization ? 1 : 0) << '\t' << hop_field(r.substitutability_hop) << '\t'
        << hop_field(r.symmetry_hop) << '\t' << hop_field(r.transitivity_hop) << '\t'
        << hop_field(r.second_symmetry_hop) << '\t'
        << (r.second_symmetry_kind ? std::string(to_string(*r.second_symmetry_kind)) : "-") << '\t'
        << (r.uncategorized ? 1 : 0) << '\n';
  }
}

void write_labels(const std::filesystem::path& path, std::span<const Instance> instances,
                  std::span<const CategoryRecord> records, const IdDictionary& items,
                  const IdDictionary& users) {
  auto out = open_out(path);
  write_labels(out, instances, records, items, users);
  finish(out, path);
}

std::vector<LabelRow> parse_labels(std::istream& in, IdDictionary& items, IdDictionary& users,
                                   std::string_view source) {
  LineReader reader(in, source, kLabelsHeader);
  std::vector<LabelRow> out;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 9) reader.fail(fmt::format("expected 9 tab-separated fields, got {}", f.size()));
    LabelRow row;
    row.user = users.intern(f[0]);
    row.target = items.intern(f[1]);
    auto& r = row.record;
    r.memorization = parse_flag(f[2], reader);
    r.substitutability_hop = parse_hop(f[3], reader);
    r.symmetry_hop = parse_hop(f[4], reader);
    r.transitivity_hop = parse_hop(f[5], reader);
    r.second_symmetry_hop = parse_hop(f[6], reader);
    if (f[7] != "-") {
      try {
        r.second_symmetry_kind = parse_second_symmetry_kind(f[7]);
      } catch (const ValidationError& e) {
        reader.fail(e.what());
      }
    }
    r.uncategorized = parse_flag(f[8], reader);
    if (r.second_symmetry_hop.has_value() != r.second_symmetry_kind.has_value()) {
      reader.fail("second_sym_hop and second_sym_kind must both be set or both be '-'");
    }
    if (r.memorization && (r.generalization() || r.uncategorized)) {
      reader.fail("memorization row carries other labels");
    }
    if (!r.memorization && r.uncategorized == r.generalization()) {
      reader.fail("uncategorized flag inconsistent with generalization labels");
    }
    out.push_back(row);
  }
  return out;
}

std::vector<LabelRow> read_labels(const std::filesystem::path& path, IdDictionary& items,
                                  IdDictionary& users) {
  auto in = open_in(path);
  return parse_labels(in, items, users, path.string());
}

// ---------------------------------------------------------------- SID map

SemanticIdMap parse_sid_map(std::istream& in, const IdDictionary& items,
                            std::vector<std::uint32_t> codebook_sizes, std::string_view source) {
  LineReader reader(in, source, kSidHeader);
  std::vector<std::pair<ItemId, std::vector<Token>>> rows;
  std::set<ItemId> seen;
  std::optional<std::size_t> length;
  std::string line;
  while (reader.next(line)) {
    const auto f = split(line, '\t');
    if (f.size() != 2) reader.fail(fmt::format("expected 2 tab-separated fields, got {}", f.size()));
    std::vector<Token> toks;
    for (auto t : split(f[1], ' ')) {
      if (t.empty()) continue;
      Token v = 0;
      if (!parse_number(t, v)) reader.fail(fmt::format("bad token '{}'", t));
      toks.push_back(v);
    }
    if (toks.empty()) reader.fail("empty token sequence");
    if (!length) length = toks.size();
    if (toks.size() != *length) {
      reader.fail(fmt::format("ragged SID: {} tokens, expected {}", toks.size(), *length));
    }
    const auto item = items.find(f[0]);
    if (!item) continue;
    if (!seen.insert(*item).second) reader.fail(fmt::format("duplicate item '{}'", f[0]));
    rows.emplace_back(*item, std::move(toks));
  }
  if (!length) throw ValidationError(fmt::format("{}: empty SID map", source));
  if (codebook_sizes.empty()) {
    codebook_sizes.assign(*length, 1);
    for (const auto& [item, toks] : rows) {
      for (std::size_t l = 0; l < toks.size(); ++l) codebook_sizes[l] = std::max(codebook_sizes[l], toks[l] + 1);
    }
  }
  SemanticIdMap map(*length, std::move(codebook_sizes));
  for (const auto& [item, toks] : rows) map.assign(item, toks);
  map.validate_unique();
  return map;
}

SemanticIdMap read_sid_map(const std::filesystem::path& path, const IdDictionary& items,
                           std::vector<std::uint32_t> codebook_sizes) {
  auto in = open_in(path);
  return parse_sid_map(in, items, std::move(codebook_sizes), path.string());
}

void write_sid_map(std::ostream& out, const SemanticIdMap& map, const IdDictionary& items) {
  out << kSidHeader << '\n';
  for (ItemId i = 0; i < items.size(); ++i) {
    if (!map.has(i)) continue;
    out << items.raw(i) << '\t';
    const auto toks = map.tokens(i);
    for (std::size_t l = 0; l < toks.size(); ++l) out << (l ? " " : "") << toks[l];
    out << '\n';
  }
}

void write_sid_map(const std::filesystem::path& path, const SemanticIdMap& map,
                   const IdDictionary& items) {
  auto out = open_out(path);
  write_sid_map(out, map, items);
  finish(out, path);
}

}  // namespace recmem
