#include "recmem/synthgen.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "recmem/error.hpp"

namespace recmem {

// ---------------------------------------------------------------- Rng

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

__extension__ using Uint128 = unsigned __int128;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& w : s_) w = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's multiply-shift; the bias is below 2^-40 for every n used here.
  return static_cast<std::uint64_t>((static_cast<Uint128>(next()) * n) >> 64);
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------- PlantSpec

namespace {

using Json = nlohmann::json;

std::size_t count_of(const std::map<int, std::size_t>& m) {
  std::size_t n = 0;
  for (const auto& [hop, c] : m) n += c;
  return n;
}

struct Plant {
  enum class Kind { kMem, kSubst, kSym, kTrans, kSecond, kUncat, kPrefix };
  Kind kind;
  int hop = 1;
  SecondSymmetryKind second = SecondSymmetryKind::kCommonCause;
  std::size_t prefix_n = 0;
};

std::size_t items_for(const Plant& p) {
  const auto fresh = static_cast<std::size_t>(p.hop - 1);
  switch (p.kind) {
    case Plant::Kind::kMem:
      return 2;
    case Plant::Kind::kSubst:
      return 4 + fresh;
    case Plant::Kind::kSym:
      return 2 + fresh;
    case Plant::Kind::kTrans:
    case Plant::Kind::kSecond:
      return 3 + fresh;
    case Plant::Kind::kUncat:
    case Plant::Kind::kPrefix:
      return 3;
  }
  return 0;
}

std::vector<Plant> enumerate_plants(const PlantSpec& s) {
  std::vector<Plant> out;
  for (std::size_t i = 0; i < s.memorization; ++i) out.push_back({Plant::Kind::kMem});
  auto per_hop = [&](Plant::Kind kind, const std::map<int, std::size_t>& m) {
    for (const auto& [hop, c] : m) {
      for (std::size_t i = 0; i < c; ++i) out.push_back({kind, hop});
    }
  };
  per_hop(Plant::Kind::kSubst, s.substitutability);
  per_hop(Plant::Kind::kSym, s.symmetry);
  per_hop(Plant::Kind::kTrans, s.transitivity);
  for (const auto& [kind, m] : s.second_symmetry) {
    for (const auto& [hop, c] : m) {
      for (std::size_t i = 0; i < c; ++i) out.push_back({Plant::Kind::kSecond, hop, kind});
    }
  }
  for (std::size_t i = 0; i < s.uncategorized; ++i) out.push_back({Plant::Kind::kUncat});
  for (const auto& [n, c] : s.prefix_plants) {
    for (std::size_t i = 0; i < c; ++i) {
      out.push_back({Plant::Kind::kPrefix, 1, SecondSymmetryKind::kCommonCause, n});
    }
  }
  return out;
}

std::map<int, std::size_t> hop_map_from_json(const Json& j, std::string_view field) {
  std::map<int, std::size_t> out;
  if (!j.is_object()) throw ValidationError(fmt::format("plant spec: '{}' must map hop -> count", field));
  for (const auto& [key, value] : j.items()) {
    int hop = 0;
    try {
      hop = std::stoi(key);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("plant spec: bad hop '{}' in '{}'", key, field));
    }
    out[hop] = value.get<std::size_t>();
  }
  return out;
}

Json hop_map_to_json(const std::map<int, std::size_t>& m) {
  Json j = Json::object();
  for (const auto& [hop, c] : m) j[std::to_string(hop)] = c;
  return j;
}

}  // namespace

std::size_t PlantSpec::planted_instances() const {
  std::size_t n = memorization + uncategorized + count_of(substitutability) + count_of(symmetry) +
                  count_of(transitivity);
  for (const auto& [kind, m] : second_symmetry) n += count_of(m);
  for (const auto& [pn, c] : prefix_plants) n += c;
  return n;
}

std::size_t PlantSpec::items_required() const {
  std::size_t n = 0;
  for (const auto& p : enumerate_plants(*this)) n += items_for(p);
  return n;
}

void PlantSpec::validate() const {
  if (max_hop < 1) throw ValidationError("plant spec: max_hop must be >= 1");
  auto check_hops = [&](const std::map<int, std::size_t>& m, int min_hop, std::string_view what) {
    for (const auto& [hop, c] : m) {
      if (hop < min_hop || hop > max_hop) {
        throw ValidationError(
            fmt::format("plant spec: {} hop {} outside [{}, {}]", what, hop, min_hop, max_hop));
      }
    }
  };
  check_hops(substitutability, 2, "substitutability");
  check_hops(symmetry, 1, "symmetry");
  check_hops(transitivity, 1, "transitivity");
  for (const auto& [kind, m] : second_symmetry) check_hops(m, 1, to_string(kind));
  if (!prefix_plants.empty() && !sid) {
    throw ValidationError("plant spec: prefix plants require a 'sid' section");
  }
  if (sid) {
    if (sid->length < 1) throw ValidationError("plant spec: sid length must be >= 1");
    if (sid->codebook < 2) throw ValidationError("plant spec: sid codebook must be >= 2");
    if (!(sid->collision_rate >= 0.0 && sid->collision_rate <= 1.0)) {
      throw ValidationError("plant spec: collision_rate must lie in [0, 1]");
    }
    for (const auto& [n, c] : prefix_plants) {
      if (n >= sid->length) {
        throw ValidationError(fmt::format(
            "plant spec: prefix plant n = {} must be below the SID length {}", n, sid->length));
      }
    }
  }
  if (filler_sequences > 0 && filler_items < 2) {
    throw ValidationError("plant spec: filler needs at least 2 filler items");
  }
  if (item_pool > 0 && items_required() > item_pool) {
    throw ValidationError(fmt::format(
        "plant spec: item pool of {} is too small; the planted patterns need {} disjoint items",
        item_pool, items_required()));
  }
}

PlantSpec PlantSpec::from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("plant spec: invalid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ValidationError("plant spec: top level must be an object");
  static const std::vector<std::string> known{
      "seed",     "max_hop",          "memorization",  "substitutability", "symmetry",
      "transitivity", "second_symmetry", "uncategorized", "item_pool",        "filler",
      "sid",      "prefix_plants"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError(fmt::format("plant spec: unknown field '{}'", key));
    }
  }
  PlantSpec s;
  try {
    s.seed = j.value("seed", std::uint64_t{0});
    s.max_hop = j.value("max_hop", 4);
    s.memorization = j.value("memorization", std::size_t{0});
    if (j.contains("substitutability")) s.substitutability = hop_map_from_json(j["substitutability"], "substitutability");
    if (j.contains("symmetry")) s.symmetry = hop_map_from_json(j["symmetry"], "symmetry");
    if (j.contains("transitivity")) s.transitivity = hop_map_from_json(j["transitivity"], "transitivity");
    if (j.contains("second_symmetry")) {
      for (const auto& [kind, m] : j["second_symmetry"].items()) {
        s.second_symmetry[parse_second_symmetry_kind(kind)] = hop_map_from_json(m, kind);
      }
    }
    s.uncategorized = j.value("uncategorized", std::size_t{0});
    s.item_pool = j.value("item_pool", std::size_t{0});
    if (j.contains("filler")) {
      s.filler_sequences = j["filler"].value("sequences", std::size_t{0});
      s.filler_items = j["filler"].value("items", std::size_t{0});
    }
    if (j.contains("sid")) {
      SidSpec sid;
      sid.length = j["sid"].value("length", std::size_t{3});
      sid.codebook = j["sid"].value("codebook", std::uint32_t{256});
      sid.collision_rate = j["sid"].value("collision_rate", 0.0);
      s.sid = sid;
    }
    if (j.contains("prefix_plants")) {
      for (const auto& [key, value] : j["prefix_plants"].items()) {
        s.prefix_plants[static_cast<std::size_t>(std::stoul(key))] = value.get<std::size_t>();
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError(fmt::format("plant spec: {}", e.what()));
  } catch (const std::logic_error& e) {
    throw ValidationError(fmt::format("plant spec: bad numeric key ({})", e.what()));
  }
  s.validate();
  return s;
}

std::string PlantSpec::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["max_hop"] = max_hop;
  j["memorization"] = memorization;
  j["substitutability"] = hop_map_to_json(substitutability);
  j["symmetry"] = hop_map_to_json(symmetry);
  j["transitivity"] = hop_map_to_json(transitivity);
  nlohmann::ordered_json second = nlohmann::ordered_json::object();
  for (const auto& [kind, m] : second_symmetry) second[std::string(to_string(kind))] = hop_map_to_json(m);
  j["second_symmetry"] = second;
  j["uncategorized"] = uncategorized;
  j["item_pool"] = item_pool;
  j["filler"] = {{"sequences", filler_sequences}, {"items", filler_items}};
  if (sid) {
    j["sid"] = {{"length", sid->length}, {"codebook", sid->codebook}, {"collision_rate", sid->collision_rate}};
  }
  if (!prefix_plants.empty()) {
    nlohmann::ordered_json pp = nlohmann::ordered_json::object();
    for (const auto& [n, c] : prefix_plants) pp[std::to_string(n)] = c;
    j["prefix_plants"] = pp;
  }
  return j.dump(2);
}

// ---------------------------------------------------------------- SID maps

namespace {

using TokenRows = std::vector<std::vector<Token>>;

/// Sets the last level so items with equal (L-1)-prefixes get 0, 1, 2, ...
/// in item order; returns the identifier codebook size needed.
std::uint32_t assign_identifiers(TokenRows& rows, std::size_t length) {
  std::map<std::vector<Token>, Token> next_id;
  std::uint32_t needed = 1;
  for (auto& r : rows) {
    std::vector<Token> head(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(length - 1));
    Token& id = next_id[head];
    r[length - 1] = id++;
    needed = std::max<std::uint32_t>(needed, id);
  }
  return needed;
}

/// Random prefix levels 1..L-1 with prefix sharing.
TokenRows random_prefix_rows(std::size_t num_items, const SidSpec& spec, Rng& rng) {
  TokenRows rows(num_items, std::vector<Token>(spec.length, 0));
  const std::size_t levels = spec.length - 1;
  for (std::size_t i = 0; i < num_items; ++i) {
    std::size_t shared = 0;
    if (i > 0 && levels > 0) {
      const std::size_t parent = rng.below(i);
      while (shared < levels && rng.unit() < spec.collision_rate) {
        rows[i][shared] = rows[parent][shared];
        ++shared;
      }
    }
    for (std::size_t l = shared; l < levels; ++l) rows[i][l] = static_cast<Token>(rng.below(spec.codebook));
  }
  return rows;
}

SemanticIdMap to_map(TokenRows& rows, const SidSpec& spec) {
  const std::uint32_t ident = assign_identifiers(rows, spec.length);
  std::vector<std::uint32_t> sizes(spec.length, spec.codebook);
  sizes.back() = std::max(spec.codebook, ident);
  SemanticIdMap map(spec.length, sizes);
  for (ItemId i = 0; i < rows.size(); ++i) map.assign(i, rows[i]);
  return map;
}

}  // namespace

SemanticIdMap random_sid_map(std::size_t num_items, const SidSpec& spec, std::uint64_t seed) {
  if (spec.length < 1) throw ValidationError("SID length must be >= 1");
  if (spec.codebook < 1) throw ValidationError("SID codebook must be >= 1");
  Rng rng(seed);
  TokenRows rows = random_prefix_rows(num_items, spec, rng);
  return to_map(rows, spec);
}

std::size_t scan_max_memorizable_n(const Dataset& train, const SemanticIdMap& map,
                                   const Instance& inst, int max_hop) {
  const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, max_hop)),
                                                  inst.history.size());
  const auto tt = map.tokens(inst.target);
  std::size_t best = 0;
  for (std::size_t k = 1; k <= limit; ++k) {
    const auto ts = map.tokens(inst.back(k));
    for (const auto& seq : train.sequences) {
      const auto& s = seq.items;
      for (std::size_t p = 0; p + k < s.size(); ++p) {
        const auto a = map.tokens(s[p]);
        const auto b = map.tokens(s[p + k]);
        std::size_t n = 0;
        while (n < map.length() && a[n] == ts[n] && b[n] == tt[n]) ++n;
        best = std::max(best, n);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------- generate

SyntheticCorpus generate(const PlantSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Plant> plants = enumerate_plants(spec);
  for (std::size_t i = plants.size(); i > 1; --i) std::swap(plants[i - 1], plants[rng.below(i)]);

  SyntheticCorpus out;
  Dataset& train = out.train;
  std::size_t next_item = 0;
  auto fresh = [&] { return train.items.intern(fmt::format("i{}", next_item++)); };
  std::size_t next_seq = 0;
  auto add_seq = [&](std::vector<ItemId> items) {
    train.sequences.push_back({train.users.intern(fmt::format("s{}", next_seq++)), std::move(items)});
  };

  struct PrefixSlot {
    std::size_t instance;
    ItemId trained_target;
    ItemId target;
    std::size_t n;
  };
  std::vector<PrefixSlot> prefix_slots;

  for (std::size_t idx = 0; idx < plants.size(); ++idx) {
    const Plant& p = plants[idx];
    Instance inst;
    inst.user = train.users.intern(fmt::format("u{}", idx));
    CategoryRecord rec;
    const ItemId src = fresh();
    const ItemId dst = fresh();
    switch (p.kind) {
      case Plant::Kind::kMem:
        add_seq({src, dst});
        rec.memorization = true;
        break;
      case Plant::Kind::kSubst: {
        const ItemId y1 = fresh();
        const ItemId y2 = fresh();
        add_seq({src, y1, y2, dst});
        rec.substitutability_hop = p.hop;
        break;
      }
      case Plant::Kind::kSym:
        add_seq({dst, src});
        rec.symmetry_hop = p.hop;
        break;
      case Plant::Kind::kTrans: {
        const ItemId x = fresh();
        add_seq({src, x});
        add_seq({x, dst});
        rec.transitivity_hop = p.hop;
        break;
      }
      case Plant::Kind::kSecond: {
        const ItemId x = fresh();
        switch (p.second) {
          case SecondSymmetryKind::kCommonCause:
            add_seq({x, src});
            add_seq({x, dst});
            break;
          case SecondSymmetryKind::kCommonEffect:
            add_seq({src, x});
            add_seq({dst, x});
            break;
          case SecondSymmetryKind::kReversePath:
            add_seq({dst, x});
            add_seq({x, src});
            break;
        }
        rec.second_symmetry_hop = p.hop;
        rec.second_symmetry_kind = p.second;
        break;
      }
      case Plant::Kind::kUncat:
      case Plant::Kind::kPrefix: {
        const ItemId w = fresh();
        add_seq({src, w});
        rec.uncategorized = true;
        if (p.kind == Plant::Kind::kPrefix) prefix_slots.push_back({idx, w, dst, p.prefix_n});
        break;
      }
    }
    inst.history.push_back(src);
    for (int z = 1; z < p.hop; ++z) inst.history.push_back(fresh());
    inst.target = dst;
    out.test.push_back(std::move(inst));
    out.expected.push_back(rec);
  }

  if (spec.filler_sequences > 0) {
    std::vector<ItemId> filler;
    for (std::size_t i = 0; i < spec.filler_items; ++i) filler.push_back(fresh());
    for (std::size_t s = 0; s < spec.filler_sequences; ++s) {
      const auto a = rng.below(filler.size());
      auto b = rng.below(filler.size() - 1);
      if (b >= a) ++b;
      add_seq({filler[a], filler[b]});
    }
  }

  AttributionConfig cfg;
  cfg.max_hop = spec.max_hop;
  const BruteForceAttributor oracle(train);
  for (std::size_t i = 0; i < out.test.size(); ++i) {
    const auto got = oracle.attribute(out.test[i], cfg);
    if (got != out.expected[i]) {
      throw ValidationError(fmt::format("synthgen: planted instance {} did not verify", i));
    }
  }

  if (spec.sid) {
    const SidSpec& sid = *spec.sid;
    constexpr int kAttempts = 64;
    for (int attempt = 0; attempt < kAttempts && !out.sid; ++attempt) {
      TokenRows rows = random_prefix_rows(train.num_items(), sid, rng);
      for (const auto& slot : prefix_slots) {
        // Share the first n levels with the trained target, then diverge.
        auto& row = rows[slot.target];
        const auto& model = rows[slot.trained_target];
        for (std::size_t l = 0; l < slot.n; ++l) row[l] = model[l];
        if (slot.n < sid.length - 1) {
          row[slot.n] = static_cast<Token>((model[slot.n] + 1 + rng.below(sid.codebook - 1)) % sid.codebook);
        }
      }
      SemanticIdMap map = to_map(rows, sid);
      bool ok = true;
      for (const auto& slot : prefix_slots) {
        if (scan_max_memorizable_n(train, map, out.test[slot.instance], spec.max_hop) != slot.n) {
          ok = false;
          break;
        }
      }
      if (ok) out.sid = std::move(map);
    }
    if (!out.sid) {
      throw ValidationError(
          "synthgen: could not realize the prefix plants; lower collision_rate or raise codebook");
    }
    out.expected_max_n.reserve(out.test.size());
    for (const auto& inst : out.test) {
      out.expected_max_n.push_back(scan_max_memorizable_n(train, *out.sid, inst, spec.max_hop));
    }
  }
  return out;
}

// ---------------------------------------------------------------- random corpora

Dataset random_corpus(const RandomCorpusSpec& spec) {
  if (spec.users == 0 || spec.items == 0) throw ValidationError("random corpus needs users and items");
  if (spec.min_length < 1 || spec.max_length < spec.min_length) {
    throw ValidationError("random corpus needs 1 <= min_length <= max_length");
  }
  Rng rng(spec.seed);
  std::vector<double> cdf;
  if (spec.zipf > 0.0) {
    cdf.resize(spec.items);
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.items; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), spec.zipf);
      cdf[i] = acc;
    }
    for (auto& c : cdf) c /= acc;
  }
  auto draw = [&]() -> std::size_t {
    if (cdf.empty()) return rng.below(spec.items);
    const double u = rng.unit();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), spec.items - 1);
  };
  Dataset d;
  d.sequences.reserve(spec.users);
  for (std::size_t u = 0; u < spec.users; ++u) {
    Sequence s;
    s.user = d.users.intern(fmt::format("u{}", u));
    const std::size_t len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
    s.items.reserve(len);
    for (std::size_t p = 0; p < len; ++p) s.items.push_back(d.items.intern(fmt::format("i{}", draw())));
    d.sequences.push_back(std::move(s));
  }
  return d;
}

}  // namespace recmem
