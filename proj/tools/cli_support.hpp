#pragma once

// Shared plumbing for the recmem subcommands: data-source flags, index
// caching, prediction loading and report output.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "recmem/domain.hpp"
#include "recmem/metrics.hpp"
#include "recmem/report.hpp"
#include "recmem/transition_index.hpp"

namespace recmem::cli {

/// Either one interactions file (split leave-last-out) or an explicit
/// training file plus instance files.
struct DataSourceOptions {
  std::string interactions;
  std::string timestamped;
  std::string train;
  std::string instances;
  std::string val_instances;
  std::size_t kcore = 0;
  std::string split = "test";

  void add_to(CLI::App* app);
};

struct LoadedData {
  Dataset train;
  std::vector<Instance> test;
  std::vector<Instance> validation;
  bool has_validation = false;

  /// Instances selected by --split.
  const std::vector<Instance>& selected(const std::string& split) const;
  std::vector<ItemId> targets(const std::string& split) const;
};

LoadedData load_data(const DataSourceOptions& opts, Provenance& prov);

/// Loads `cache` when it exists and fits, otherwise builds (and saves to
/// `cache` when non-empty).
TransitionIndex build_or_load_index(const Dataset& train, int max_hop, const std::string& cache,
                                    unsigned threads);

/// "name=path" pairs from repeated --pred flags.
std::vector<std::pair<std::string, std::string>> parse_named_paths(
    const std::vector<std::string>& specs, const char* flag);

/// Reads a predictions file and orders it like `instances`.
std::vector<PredictionList> load_predictions(const std::string& path, const std::string& name,
                                             const Dataset& dict, std::span<const Instance> instances,
                                             bool expect_probability, Provenance& prov);

/// Echoes every option of `sub` (name=value) into the provenance config.
void record_options(const CLI::App* sub, Provenance& prov);

/// Prints tables as TSV to stdout and writes them to `out` if non-empty.
void emit(const std::vector<Table>& tables, const std::string& out, const Provenance& prov,
          bool quiet = false);

}  // namespace recmem::cli
