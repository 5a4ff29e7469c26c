#include "cli_support.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iostream>

#include "recmem/error.hpp"
#include "recmem/ingest_io.hpp"

namespace recmem::cli {

void DataSourceOptions::add_to(CLI::App* app) {
  auto* inter = app->add_option("--interactions", interactions,
                                "user<TAB>item,item,... file, split leave-last-out");
  auto* ts = app->add_option("--timestamped", timestamped,
                             "user<TAB>item<TAB>timestamp file, grouped then split leave-last-out");
  auto* tr = app->add_option("--train", train, "training sequences (interactions format)");
  app->add_option("--instances", instances, "test instances user<TAB>history<TAB>target")->needs(tr);
  app->add_option("--val-instances", val_instances, "validation instances")->needs(tr);
  app->add_option("--kcore", kcore, "iterative k-core filter before splitting (0 disables; 5 is customary)");
  app->add_option("--split", split, "which instances to analyse")
      ->check(CLI::IsMember({"test", "validation"}));
  inter->excludes(tr)->excludes(ts);
  ts->excludes(tr);
}

const std::vector<Instance>& LoadedData::selected(const std::string& split) const {
  if (split == "validation") {
    if (!has_validation) throw ValidationError("no validation instances (pass --val-instances)");
    return validation;
  }
  return test;
}

std::vector<ItemId> LoadedData::targets(const std::string& split) const {
  std::vector<ItemId> out;
  for (const auto& inst : selected(split)) out.push_back(inst.target);
  return out;
}

LoadedData load_data(const DataSourceOptions& opts, Provenance& prov) {
  LoadedData data;
  const std::optional<std::size_t> kcore = opts.kcore > 0 ? std::optional(opts.kcore) : std::nullopt;
  if (!opts.interactions.empty() || !opts.timestamped.empty()) {
    Dataset full;
    if (!opts.interactions.empty()) {
      prov.add_input("interactions", opts.interactions);
      full = read_interactions(opts.interactions, kcore);
    } else {
      prov.add_input("timestamped", opts.timestamped);
      std::ifstream in(opts.timestamped, std::ios::binary);
      if (!in) throw IoError(fmt::format("cannot open '{}'", opts.timestamped));
      auto raw = parse_timestamped(in, opts.timestamped);
      if (kcore) raw = kcore_filter(std::move(raw), *kcore);
      full = build_dataset(raw);
    }
    auto split = make_instances(full);
    data.train = std::move(split.train);
    data.test = std::move(split.test);
    data.validation = std::move(split.validation);
    data.has_validation = true;
    return data;
  }
  if (opts.train.empty()) {
    throw ValidationError("no data source: pass --interactions, --timestamped or --train");
  }
  prov.add_input("train", opts.train);
  data.train = read_interactions(opts.train, kcore);
  if (!opts.instances.empty()) {
    prov.add_input("instances", opts.instances);
    data.test = read_instances(opts.instances, data.train.items, data.train.users);
  }
  if (!opts.val_instances.empty()) {
    prov.add_input("val_instances", opts.val_instances);
    data.validation = read_instances(opts.val_instances, data.train.items, data.train.users);
    data.has_validation = true;
  }
  return data;
}

TransitionIndex build_or_load_index(const Dataset& train, int max_hop, const std::string& cache,
                                    unsigned threads) {
  if (!cache.empty() && std::filesystem::exists(cache)) {
    auto idx = TransitionIndex::load(std::filesystem::path(cache));
    if (idx.max_hop() >= max_hop && idx.num_items() == train.num_items()) return idx;
    std::cerr << fmt::format("index cache '{}' does not fit (max_hop {}, {} items); rebuilding\n",
                             cache, idx.max_hop(), idx.num_items());
  }
  auto idx = TransitionIndex::build(train, max_hop, threads);
  if (!cache.empty()) idx.save(std::filesystem::path(cache));
  return idx;
}

std::vector<std::pair<std::string, std::string>> parse_named_paths(
    const std::vector<std::string>& specs, const char* flag) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw ValidationError(fmt::format("{} expects name=path, got '{}'", flag, s));
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

std::vector<PredictionList> load_predictions(const std::string& path, const std::string& name,
                                             const Dataset& dict, std::span<const Instance> instances,
                                             bool expect_probability, Provenance& prov) {
  prov.add_input("pred:" + name, path);
  const auto lists = read_predictions(path, dict.items, dict.users, expect_probability);
  return align_predictions(lists, instances, name);
}

void record_options(const CLI::App* sub, Provenance& prov) {
  for (const auto* opt : sub->get_options()) {
    const std::string& name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    prov.add_config(sub->get_name() + "." + name, value);
  }
}

void emit(const std::vector<Table>& tables, const std::string& out, const Provenance& prov,
          bool quiet) {
  if (!quiet) {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (i > 0) std::cout << '\n';
      write_tsv(std::cout, tables[i]);
    }
  }
  if (!out.empty()) write_report(out, tables, format_for_path(out), &prov);
}

}  // namespace recmem::cli
