#pragma once

// Deterministic synthetic corpora.
//
// generate() plants test instances whose attribution is known by
// construction. Every planted pattern draws fresh items, so patterns cannot
// interfere. For a pattern at hop k the history is [P, Z_1, .., Z_{k-1}] with
// Z items that never occur in training, which puts the source P exactly k
// steps before the target Q:
//
//   memorization        train [P,Q]
//   substitutability@k  train [P,Y1,Y2,Q]
//   symmetry@k          train [Q,P]
//   transitivity@k      train [P,X] [X,Q]
//   common cause@k      train [X,P] [X,Q]
//   common effect@k     train [P,X] [Q,X]
//   reverse path@k      train [Q,X] [X,P]
//   uncategorized       train [P,W], target Q unseen
//
// Filler sequences have length 2 and use their own item range. The expected
// records are re-derived with the brute-force attributor before returning.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/domain.hpp"
#include "recmem/token_lens.hpp"

namespace recmem {

/// splitmix64-seeded xoshiro256** generator. Bit-identical on every platform,
/// unlike the standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform in [0, 1).
  double unit();

 private:
  std::array<std::uint64_t, 4> s_{};
};

struct SidSpec {
  std::size_t length = 3;
  std::uint32_t codebook = 256;
  double collision_rate = 0.0;
};

struct PlantSpec {
  std::uint64_t seed = 0;
  int max_hop = 4;
  std::size_t memorization = 0;
  std::map<int, std::size_t> substitutability;  // hop -> count
  std::map<int, std::size_t> symmetry;
  std::map<int, std::size_t> transitivity;
  std::map<SecondSymmetryKind, std::map<int, std::size_t>> second_symmetry;
  std::size_t uncategorized = 0;
  /// Upper bound on items used by planted patterns; 0 sizes it automatically.
  std::size_t item_pool = 0;
  std::size_t filler_sequences = 0;
  std::size_t filler_items = 0;
  std::optional<SidSpec> sid;
  /// Prefix-memorization plants (requires `sid`): n -> count. Each is an
  /// uncategorized instance whose max memorizable prefix length is exactly n.
  std::map<std::size_t, std::size_t> prefix_plants;

  /// Throws ValidationError on negative hops, hops above max_hop,
  /// substitutability at hop 1 or an undersized pool.
  void validate() const;
  std::size_t planted_instances() const;
  std::size_t items_required() const;

  static PlantSpec from_json(std::string_view text);
  std::string to_json() const;
};

struct SyntheticCorpus {
  Dataset train;                    // dictionaries also hold test users and unseen items
  std::vector<Instance> test;
  std::vector<CategoryRecord> expected;
  std::optional<SemanticIdMap> sid;
  /// Per test instance, the largest prefix length n with 1-hop..max_hop
  /// prefix memorization, from a direct scan. Empty without `sid`.
  std::vector<std::size_t> expected_max_n;
};

/// Pure function of the spec. Throws ValidationError for an infeasible spec.
SyntheticCorpus generate(const PlantSpec& spec);

struct RandomCorpusSpec {
  std::uint64_t seed = 0;
  std::size_t users = 100;
  std::size_t items = 50;
  std::size_t min_length = 1;
  std::size_t max_length = 15;
  /// Zipf exponent of item popularity; 0 draws items uniformly.
  double zipf = 0.0;
};

/// Unstructured corpus for property tests and benchmarks. Users are "u<n>",
/// items "i<n>" interned in first-appearance order.
Dataset random_corpus(const RandomCorpusSpec& spec);

/// Injective SID map over items [0, num_items). With probability
/// `collision_rate` per level an item keeps sharing the prefix of an earlier
/// item; the last level is an identifier that separates items with equal
/// (L-1)-prefixes.
SemanticIdMap random_sid_map(std::size_t num_items, const SidSpec& spec, std::uint64_t seed);

/// Largest n in [0, L] such that for some k <= min(max_hop, |history|) a
/// training pair at gap k matches the n-prefixes of (i_{t-k}, i_t).
/// Direct scan of the training sequences; used as ground truth.
std::size_t scan_max_memorizable_n(const Dataset& train, const SemanticIdMap& map,
                                   const Instance& inst, int max_hop);

}  // namespace recmem
