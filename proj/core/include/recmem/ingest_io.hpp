#pragma once

// Line-oriented TSV formats and dataset preprocessing.
//
//   interactions  user<TAB>item1,item2,...        one user per line, chronological
//   predictions   user<TAB>item:score,item:score  scores non-increasing
//   instances     user<TAB>h1,h2,...<TAB>target
//   labels        user<TAB>target<TAB>mem<TAB>...  (header "user\ttarget\t...")
//   sid map       item<TAB>t1 t2 ... tL
//
// Lines starting with '#' are comments; blank lines are skipped. Writers emit
// a header line and readers skip one if present. Parse errors carry the source
// name and line number.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/domain.hpp"
#include "recmem/metrics.hpp"
#include "recmem/token_lens.hpp"

namespace recmem {

inline constexpr std::size_t kDefaultKCore = 5;

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double avg_length = 0.0;
};

DatasetStats dataset_stats(const Dataset& d);

/// Raw (string-keyed) user sequences, before dictionary assignment.
struct RawSequence {
  std::string user;
  std::vector<std::string> items;
};

/// Iterative k-core: drops items with fewer than k occurrences and users with
/// fewer than k interactions until nothing changes. Order is preserved.
std::vector<RawSequence> kcore_filter(std::vector<RawSequence> seqs, std::size_t k);

/// Interns users and items in first-appearance order.
Dataset build_dataset(const std::vector<RawSequence>& seqs);

std::vector<RawSequence> parse_raw_interactions(std::istream& in, std::string_view source = "<input>");

/// Parses, optionally k-core filters, then assigns dense ids. Throws
/// ValidationError on a malformed line or when nothing remains.
Dataset parse_interactions(std::istream& in, std::optional<std::size_t> kcore = std::nullopt,
                           std::string_view source = "<input>");
Dataset read_interactions(const std::filesystem::path& path,
                          std::optional<std::size_t> kcore = std::nullopt);
void write_interactions(std::ostream& out, const Dataset& d);
void write_interactions(const std::filesystem::path& path, const Dataset& d);

/// Groups "user<TAB>item<TAB>timestamp" triples into chronological sequences.
/// Ties keep input order; users are ordered by first appearance.
std::vector<RawSequence> parse_timestamped(std::istream& in, std::string_view source = "<input>");

/// Instances. Unseen users/items are interned into the given dictionaries.
std::vector<Instance> parse_instances(std::istream& in, IdDictionary& items, IdDictionary& users,
                                      std::string_view source = "<input>");
std::vector<Instance> read_instances(const std::filesystem::path& path, IdDictionary& items,
                                     IdDictionary& users);
void write_instances(std::ostream& out, std::span<const Instance> instances,
                     const IdDictionary& items, const IdDictionary& users);
void write_instances(const std::filesystem::path& path, std::span<const Instance> instances,
                     const IdDictionary& items, const IdDictionary& users);

/// Predictions. Users and items must already be in the dictionaries.
/// Rejects non-monotone scores, duplicate items, duplicate users, unknown
/// users/items, and (when `expect_probability`) non-sub-distributions.
std::vector<PredictionList> parse_predictions(std::istream& in, const IdDictionary& items,
                                              const IdDictionary& users, bool expect_probability,
                                              std::string_view source = "<input>");
std::vector<PredictionList> read_predictions(const std::filesystem::path& path,
                                             const IdDictionary& items, const IdDictionary& users,
                                             bool expect_probability);
void write_predictions(std::ostream& out, std::span<const PredictionList> preds,
                       const IdDictionary& items, const IdDictionary& users);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionList> preds,
                       const IdDictionary& items, const IdDictionary& users);

/// Reorders per-user lists to follow `instances`. Throws ValidationError if an
/// instance's user has no list.
std::vector<PredictionList> align_predictions(std::span<const PredictionList> preds,
                                              std::span<const Instance> instances,
                                              std::string_view model = "model");

struct LabelRow {
  UserId user = 0;
  ItemId target = 0;
  CategoryRecord record;
};

void write_labels(std::ostream& out, std::span<const Instance> instances,
                  std::span<const CategoryRecord> records, const IdDictionary& items,
                  const IdDictionary& users);
void write_labels(const std::filesystem::path& path, std::span<const Instance> instances,
                  std::span<const CategoryRecord> records, const IdDictionary& items,
                  const IdDictionary& users);
/// Unknown users/items are interned.
std::vector<LabelRow> parse_labels(std::istream& in, IdDictionary& items, IdDictionary& users,
                                   std::string_view source = "<input>");
std::vector<LabelRow> read_labels(const std::filesystem::path& path, IdDictionary& items,
                                  IdDictionary& users);

/// SID map. Lines for items outside `items` are ignored. Codebook sizes are
/// taken from `codebook_sizes` when given, else max token + 1 per level.
/// Throws ValidationError on ragged lines, duplicate items or duplicate
/// full token sequences.
SemanticIdMap parse_sid_map(std::istream& in, const IdDictionary& items,
                            std::vector<std::uint32_t> codebook_sizes = {},
                            std::string_view source = "<input>");
SemanticIdMap read_sid_map(const std::filesystem::path& path, const IdDictionary& items,
                           std::vector<std::uint32_t> codebook_sizes = {});
/// Writes every item of `items` that has tokens.
void write_sid_map(std::ostream& out, const SemanticIdMap& map, const IdDictionary& items);
void write_sid_map(const std::filesystem::path& path, const SemanticIdMap& map,
                   const IdDictionary& items);

}  // namespace recmem
