// recmem: memorization / generalization analysis of sequential
// recommendation corpora.

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli_support.hpp"
#include "recmem/attribution.hpp"
#include "recmem/ensemble.hpp"
#include "recmem/error.hpp"
#include "recmem/ingest_io.hpp"
#include "recmem/metrics.hpp"
#include "recmem/parallel.hpp"
#include "recmem/report.hpp"
#include "recmem/synthgen.hpp"
#include "recmem/token_lens.hpp"

namespace recmem::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Globals {
  unsigned threads = 0;
  bool quiet = false;

  unsigned workers() const { return threads == 0 ? default_thread_count() : threads; }
};

std::vector<CategoryRecord> labels_for(const LoadedData& data, const std::vector<Instance>& instances,
                                       int max_hop, MatchMode match, unsigned threads) {
  const auto index = TransitionIndex::build(data.train, max_hop, threads);
  AttributionConfig cfg{max_hop, match};
  return attribute_all(index, instances, cfg, threads).records;
}

// ---------------------------------------------------------------- index

struct IndexCmd {
  DataSourceOptions src;
  int max_hop = 4;
  std::string out;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("index", "build and cache the transition index");
    src.add_to(sub);
    sub->add_option("--max-hop", max_hop, "largest positional gap indexed")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "cache file to write")->required();
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto t0 = Clock::now();
    const auto index = TransitionIndex::build(data.train, max_hop, g.workers());
    index.save(std::filesystem::path(out));
    const auto stats = dataset_stats(data.train);
    Table t{"index", {"statistic", "value"}, {}, {}};
    t.add_row({Cell::text_of("train_users"), Cell::int_of(static_cast<std::int64_t>(stats.users))});
    t.add_row({Cell::text_of("items"), Cell::int_of(static_cast<std::int64_t>(stats.items))});
    t.add_row({Cell::text_of("train_interactions"), Cell::int_of(static_cast<std::int64_t>(stats.interactions))});
    t.add_row({Cell::text_of("avg_length"), Cell::real_of(stats.avg_length)});
    for (int h = 1; h <= max_hop; ++h) {
      t.add_row({Cell::text_of(fmt::format("pairs@{}", h)),
                 Cell::int_of(static_cast<std::int64_t>(index.successor_relation(h).nnz()))});
    }
    t.add_row({Cell::text_of("pairs@any"), Cell::int_of(static_cast<std::int64_t>(index.any_gap_relation().nnz()))});
    emit({t}, "", prov, g.quiet);
    std::cerr << fmt::format("index built in {:.3f} s\n", seconds_since(t0));
  }
};

// ---------------------------------------------------------------- attribute

struct AttributeCmd {
  DataSourceOptions src;
  int max_hop = 4;
  std::string match = "adjacent";
  std::string labels;
  std::string summary;
  std::string cache;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("attribute", "label instances as memorization / generalization / uncategorized");
    src.add_to(sub);
    sub->add_option("--max-hop", max_hop, "largest hop considered")->check(CLI::PositiveNumber);
    sub->add_option("--match", match, "how a transition counts as observed")
        ->check(CLI::IsMember({"adjacent", "any_gap"}));
    sub->add_option("--labels", labels, "per-instance label TSV to write");
    sub->add_option("--summary", summary, "ratio summary (.tsv or .json)");
    sub->add_option("--index-cache", cache, "transition index cache to load or create");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto& instances = data.selected(src.split);
    const auto t0 = Clock::now();
    const auto index = build_or_load_index(data.train, max_hop, cache, g.workers());
    AttributionConfig cfg{max_hop, parse_match_mode(match)};
    const auto result = attribute_all(index, instances, cfg, g.workers());
    std::cerr << fmt::format("attributed {} instances in {:.3f} s ({} threads)\n", instances.size(),
                             seconds_since(t0), g.workers());
    if (!labels.empty()) write_labels(labels, instances, result.records, data.train.items, data.train.users);
    emit({ratio_table(result.summary, max_hop)}, summary, prov, g.quiet);
  }
};

// ---------------------------------------------------------------- tokenmem

struct TokenMemCmd {
  DataSourceOptions src;
  std::string sid;
  int max_hop = 4;
  std::size_t max_n = 0;
  std::string match = "adjacent";
  std::string out;
  std::string per_instance;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("tokenmem", "prefix n-gram memorization over a semantic-ID map");
    src.add_to(sub);
    sub->add_option("--sid", sid, "item<TAB>t1 t2 ... tL file")->required();
    sub->add_option("--max-hop", max_hop, "largest hop aggregated")->check(CLI::PositiveNumber);
    sub->add_option("--max-n", max_n, "largest prefix length (0 = SID length)");
    sub->add_option("--match", match, "observation mode for the category breakdown")
        ->check(CLI::IsMember({"adjacent", "any_gap"}));
    sub->add_option("--out", out, "bucket + category reduction report (.tsv or .json)");
    sub->add_option("--per-instance", per_instance, "per-instance max-n, support, phi and psi");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    prov.add_input("sid", sid);
    const auto map = read_sid_map(sid, data.train.items);
    const std::size_t n_max = max_n == 0 ? map.length() : max_n;
    if (n_max > map.length()) {
      throw ValidationError(fmt::format("--max-n {} exceeds the SID length {}", n_max, map.length()));
    }
    const auto& instances = data.selected(src.split);
    const auto index = TransitionIndex::build(data.train, max_hop, g.workers());
    const auto pidx = PrefixTransitionIndex::build(data.train, index, map, n_max);
    const auto buckets = token_memorization_buckets(pidx, instances, max_hop, g.workers());
    const auto records =
        attribute_all(index, instances, AttributionConfig{max_hop, parse_match_mode(match)}, g.workers()).records;
    emit({token_bucket_table(buckets), category_reduction_table(category_reduction(records, buckets))}, out,
         prov, g.quiet);

    if (!per_instance.empty()) {
      Table t{"per_instance", {"user", "target", "max_n"}, {}, {}};
      for (std::size_t n = 1; n <= n_max; ++n) t.columns.push_back(fmt::format("C_{}", n));
      t.columns.push_back("phi");
      for (std::size_t n = 1; n <= n_max; ++n) t.columns.push_back(fmt::format("psi_{}", n));
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        std::vector<Cell> row{Cell::text_of(data.train.users.raw(inst.user)),
                              Cell::text_of(data.train.items.raw(inst.target)),
                              Cell::int_of(static_cast<std::int64_t>(buckets.per_instance[i]))};
        for (std::size_t n = 1; n <= n_max; ++n) {
          row.push_back(Cell::int_of(static_cast<std::int64_t>(support(pidx, inst, n, max_hop))));
        }
        const auto ph = phi(index, inst);
        row.push_back(ph.defined() ? Cell::real_of(ph.value()) : Cell::missing());
        for (std::size_t n = 1; n <= n_max; ++n) {
          const auto ps = psi(pidx, inst, n);
          row.push_back(ps.defined() ? Cell::real_of(ps.value()) : Cell::missing());
        }
        t.add_row(std::move(row));
      }
      write_report(per_instance, {t}, format_for_path(per_instance), &prov);
    }
  }
};

// ---------------------------------------------------------------- evaluate

struct EvaluateCmd {
  DataSourceOptions src;
  std::vector<std::string> preds;
  std::string labels;
  std::size_t k = 10;
  int max_hop = 4;
  std::string match = "adjacent";
  std::string out;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("evaluate", "per-category NDCG@K / Recall@K breakdown");
    src.add_to(sub);
    sub->add_option("--pred", preds, "model predictions as name=path (repeatable)")->required();
    sub->add_option("--labels", labels, "label TSV from 'attribute' (computed when omitted)");
    sub->add_option("--k", k, "cutoff")->check(CLI::PositiveNumber);
    sub->add_option("--max-hop", max_hop, "largest hop")->check(CLI::PositiveNumber);
    sub->add_option("--match", match, "observation mode when labels are computed")
        ->check(CLI::IsMember({"adjacent", "any_gap"}));
    sub->add_option("--out", out, "breakdown report (.tsv or .json)");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto& instances = data.selected(src.split);
    std::vector<CategoryRecord> records;
    if (!labels.empty()) {
      prov.add_input("labels", labels);
      const auto rows = read_labels(labels, data.train.items, data.train.users);
      if (rows.size() != instances.size()) {
        throw ValidationError(fmt::format("{} label rows for {} instances", rows.size(), instances.size()));
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].user != instances[i].user || rows[i].target != instances[i].target) {
          throw ValidationError(fmt::format("label row {} does not match instance order", i + 1));
        }
        records.push_back(rows[i].record);
      }
    } else {
      records = labels_for(data, instances, max_hop, parse_match_mode(match), g.workers());
    }
    std::vector<ItemId> targets;
    for (const auto& inst : instances) targets.push_back(inst.target);
    std::vector<ModelScores> models;
    for (const auto& [name, path] : parse_named_paths(preds, "--pred")) {
      const auto lists = load_predictions(path, name, data.train, instances, false, prov);
      models.push_back(score_model(name, lists, targets, k));
    }
    emit({breakdown_table(breakdown(records, models, k, max_hop))}, out, prov, g.quiet);
  }
};

// ---------------------------------------------------------------- bins

struct BinsCmd {
  DataSourceOptions src;
  std::string key = "support";
  std::vector<std::string> preds;
  std::string sid;
  std::size_t n = 1;
  std::size_t bins = 5;
  std::size_t k = 10;
  int max_hop = 4;
  std::string out;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("bins", "quantile-binned metric tables");
    src.add_to(sub);
    sub->add_option("--key", key, "binning key")->check(CLI::IsMember({"support", "phi-psi", "msp"}));
    sub->add_option("--pred", preds,
                    "model predictions as name=path; phi-psi reports first minus second, "
                    "msp takes the ID model first")
        ->required();
    sub->add_option("--sid", sid, "SID map (support and phi-psi keys)");
    sub->add_option("--n", n, "prefix length for support / psi")->check(CLI::PositiveNumber);
    sub->add_option("--bins", bins, "number of quantile bins")->check(CLI::PositiveNumber);
    sub->add_option("--k", k, "NDCG cutoff")->check(CLI::PositiveNumber);
    sub->add_option("--max-hop", max_hop, "largest hop")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "report (.tsv or .json)");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto& instances = data.selected(src.split);
    std::vector<ItemId> targets;
    for (const auto& inst : instances) targets.push_back(inst.target);
    const auto named = parse_named_paths(preds, "--pred");
    const auto index = TransitionIndex::build(data.train, max_hop, g.workers());
    const auto records = attribute_all(index, instances, AttributionConfig{max_hop}, g.workers()).records;
    std::vector<std::uint8_t> mem;
    for (const auto& r : records) mem.push_back(r.memorization ? 1 : 0);

    if (key == "msp") {
      if (named.size() != 2) throw ValidationError("--key msp needs exactly two --pred (ID model first)");
      const auto id = load_predictions(named[0].second, named[0].first, data.train, instances, true, prov);
      const auto gr = load_predictions(named[1].second, named[1].first, data.train, instances, false, prov);
      emit({binned_table(indicator_report(targets, id, gr, records, bins, k, named[0].first, named[1].first))},
           out, prov, g.quiet);
      return;
    }

    if (sid.empty()) throw ValidationError(fmt::format("--key {} needs --sid", key));
    prov.add_input("sid", sid);
    const auto map = read_sid_map(sid, data.train.items);
    if (n > map.length()) throw ValidationError(fmt::format("--n {} exceeds the SID length {}", n, map.length()));
    const auto pidx = PrefixTransitionIndex::build(data.train, index, map, map.length());

    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    for (const auto& [name, path] : named) {
      const auto lists = load_predictions(path, name, data.train, instances, false, prov);
      names.push_back(name);
      rows.push_back(score_model(name, lists, targets, k).ndcg);
    }

    if (key == "support") {
      std::vector<double> keys;
      for (const auto& inst : instances) keys.push_back(static_cast<double>(support(pidx, inst, n, max_hop)));
      emit({binned_table(binned_report(fmt::format("C_{}", n), keys, fmt::format("ndcg@{}", k), names, rows,
                                       mem, bins))},
           out, prov, g.quiet);
      return;
    }
    if (named.size() != 2) throw ValidationError("--key phi-psi needs exactly two --pred");
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& inst : instances) {
      xs.push_back(phi(index, inst).value());
      ys.push_back(psi(pidx, inst, n).value());
    }
    emit({grid_table(binned_grid("phi", xs, fmt::format("psi_{}", n), ys, names[0], rows[0], names[1],
                                 rows[1], bins))},
         out, prov, g.quiet);
  }
};

// ---------------------------------------------------------------- ensemble

struct EnsembleOptions {
  std::string normalization = "minmax";
  std::size_t k = 10;

  void add_to(CLI::App* sub) {
    sub->add_option("--normalization", normalization, "per-list score normalization")
        ->check(CLI::IsMember({"minmax", "rank_reciprocal"}));
    sub->add_option("--k", k, "cutoff")->check(CLI::PositiveNumber);
  }
};

Table model_table(std::size_t k) {
  return Table{"ensemble", {"model", "config", fmt::format("N@{}", k), fmt::format("R@{}", k)}, {}, {}};
}

void add_model_row(Table& t, const std::string& name, const std::string& config,
                   std::span<const PredictionList> lists, std::span<const ItemId> targets, std::size_t k) {
  const auto s = score_model(name, lists, targets, k);
  double nd = 0.0;
  double rc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    nd += s.ndcg[i];
    rc += s.recall[i];
  }
  const double n = targets.empty() ? 1.0 : static_cast<double>(targets.size());
  t.add_row({Cell::text_of(name), Cell::text_of(config), Cell::metric(nd / n), Cell::metric(rc / n)});
}

std::string describe(const EnsembleConfig& c) {
  if (c.mode == FusionMode::kFixed) return fmt::format("alpha_static={}", c.alpha_static);
  return fmt::format("q={} tau={}", c.q, c.tau);
}

struct EnsembleRunCmd {
  DataSourceOptions src;
  EnsembleOptions eo;
  std::string id;
  std::string gr;
  std::string mode = "adaptive";
  double q = 5.0;
  double tau = 0.2;
  double alpha_static = 0.5;
  std::string fused_out;
  std::string out;
  CLI::App* sub = nullptr;

  void setup(CLI::App* parent) {
    sub = parent->add_subcommand("run", "fuse two models' predictions");
    src.add_to(sub);
    eo.add_to(sub);
    sub->add_option("--id", id, "ID model predictions name=path (probabilities)")->required();
    sub->add_option("--gr", gr, "generative model predictions name=path")->required();
    sub->add_option("--mode", mode, "weighting")->check(CLI::IsMember({"adaptive", "fixed"}));
    sub->add_option("--q", q, "sigmoid steepness")->check(CLI::NonNegativeNumber);
    sub->add_option("--tau", tau, "MSP threshold");
    sub->add_option("--alpha-static", alpha_static, "fixed ID-model weight")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--fused-out", fused_out, "fused predictions file");
    sub->add_option("--out", out, "report (.tsv or .json)");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto& instances = data.selected(src.split);
    const auto targets = data.targets(src.split);
    const auto idp = parse_named_paths({id}, "--id").front();
    const auto grp = parse_named_paths({gr}, "--gr").front();
    const bool adaptive = mode == "adaptive";
    const auto id_lists = load_predictions(idp.second, idp.first, data.train, instances, adaptive, prov);
    const auto gr_lists = load_predictions(grp.second, grp.first, data.train, instances, false, prov);
    EnsembleConfig cfg{q, tau, alpha_static, parse_fusion_mode(mode), parse_normalization(eo.normalization)};
    cfg.validate();
    const auto fused = fuse_all(id_lists, gr_lists, cfg, g.workers());
    if (!fused_out.empty()) write_predictions(fused_out, fused, data.train.items, data.train.users);
    Table t = model_table(eo.k);
    add_model_row(t, idp.first, "-", id_lists, targets, eo.k);
    add_model_row(t, grp.first, "-", gr_lists, targets, eo.k);
    add_model_row(t, adaptive ? "Adaptive" : "Fixed-weight", describe(cfg), fused, targets, eo.k);
    std::size_t union_total = 0;
    for (const auto& f : fused) union_total += f.ranked.size();
    prov.add_config("mean_union_size",
                    fmt::format("{:.2f}", fused.empty() ? 0.0 : static_cast<double>(union_total) /
                                                                 static_cast<double>(fused.size())));
    emit({t}, out, prov, g.quiet);
  }
};

struct EnsembleTuneCmd {
  DataSourceOptions src;
  EnsembleOptions eo;
  std::string val_id;
  std::string val_gr;
  std::string test_id;
  std::string test_gr;
  std::vector<double> q_grid;
  std::vector<double> tau_grid;
  std::vector<double> alpha_grid;
  std::string grid_out;
  std::string out;
  CLI::App* sub = nullptr;

  void setup(CLI::App* parent) {
    sub = parent->add_subcommand("tune", "grid-search fusion hyperparameters on validation data");
    src.add_to(sub);
    eo.add_to(sub);
    sub->add_option("--val-id", val_id, "validation ID predictions name=path")->required();
    sub->add_option("--val-gr", val_gr, "validation GR predictions name=path")->required();
    sub->add_option("--test-id", test_id, "test ID predictions name=path");
    sub->add_option("--test-gr", test_gr, "test GR predictions name=path");
    sub->add_option("--q-grid", q_grid, "q values (default 1,5,9,13)")->delimiter(',');
    sub->add_option("--tau-grid", tau_grid, "tau values (default 0,0.1,...,0.5)")->delimiter(',');
    sub->add_option("--alpha-grid", alpha_grid, "alpha_static values (default 0,0.1,...,1)")->delimiter(',');
    sub->add_option("--grid-out", grid_out, "full grid record (.json or .tsv)");
    sub->add_option("--out", out, "best-config report (.tsv or .json)");
  }

  void run(const Globals& g) {
    Provenance prov = Provenance::current();
    record_options(sub, prov);
    auto data = load_data(src, prov);
    const auto& val = data.selected("validation");
    const auto val_targets = data.targets("validation");
    const auto vid = parse_named_paths({val_id}, "--val-id").front();
    const auto vgr = parse_named_paths({val_gr}, "--val-gr").front();
    const auto vid_lists = load_predictions(vid.second, vid.first, data.train, val, true, prov);
    const auto vgr_lists = load_predictions(vgr.second, vgr.first, data.train, val, false, prov);
    TuneGrids grids = TuneGrids::defaults();
    if (!q_grid.empty()) grids.q = q_grid;
    if (!tau_grid.empty()) grids.tau = tau_grid;
    if (!alpha_grid.empty()) grids.alpha_static = alpha_grid;
    const auto norm = parse_normalization(eo.normalization);
    const auto result = tune(val_targets, vid_lists, vgr_lists, grids, norm, eo.k, g.workers());
    std::cerr << fmt::format("evaluated {} adaptive + {} fixed configs\n", result.adaptive.size(),
                             result.fixed.size());
    if (!grid_out.empty()) {
      write_report(grid_out, {tune_grid_table(result)}, format_for_path(grid_out), &prov);
    }

    const bool with_test = !test_id.empty() && !test_gr.empty();
    const auto& instances = with_test ? data.selected("test") : val;
    const auto targets = with_test ? data.targets("test") : val_targets;
    std::vector<PredictionList> id_lists = vid_lists;
    std::vector<PredictionList> gr_lists = vgr_lists;
    std::string id_name = vid.first;
    std::string gr_name = vgr.first;
    if (with_test) {
      const auto tid = parse_named_paths({test_id}, "--test-id").front();
      const auto tgr = parse_named_paths({test_gr}, "--test-gr").front();
      id_lists = load_predictions(tid.second, tid.first, data.train, instances, true, prov);
      gr_lists = load_predictions(tgr.second, tgr.first, data.train, instances, false, prov);
      id_name = tid.first;
      gr_name = tgr.first;
    }
    prov.add_config("evaluated_on", with_test ? "test" : "validation");
    Table t = model_table(eo.k);
    add_model_row(t, id_name, "-", id_lists, targets, eo.k);
    add_model_row(t, gr_name, "-", gr_lists, targets, eo.k);
    add_model_row(t, "Fixed-weight", describe(result.best_fixed.config),
                  fuse_all(id_lists, gr_lists, result.best_fixed.config, g.workers()), targets, eo.k);
    add_model_row(t, "Adaptive", describe(result.best_adaptive.config),
                  fuse_all(id_lists, gr_lists, result.best_adaptive.config, g.workers()), targets, eo.k);
    emit({t}, out, prov, g.quiet);
  }
};

// ---------------------------------------------------------------- synth

struct SynthCmd {
  std::string spec;
  std::string out_dir;
  std::size_t random_users = 0;
  std::size_t random_items = 1000;
  std::size_t min_len = 1;
  std::size_t max_len = 15;
  double zipf = 0.0;
  std::uint64_t seed = 0;
  CLI::App* sub = nullptr;

  void setup(CLI::App& app) {
    sub = app.add_subcommand("synth", "write a synthetic corpus");
    sub->add_option("--spec", spec, "plant spec (JSON)");
    sub->add_option("--out-dir", out_dir, "output directory")->required();
    sub->add_option("--random-users", random_users, "write an unstructured corpus with this many users instead");
    sub->add_option("--random-items", random_items, "item vocabulary of the unstructured corpus");
    sub->add_option("--min-len", min_len, "shortest unstructured sequence");
    sub->add_option("--max-len", max_len, "longest unstructured sequence");
    sub->add_option("--zipf", zipf, "item popularity exponent (0 = uniform)");
    sub->add_option("--seed", seed, "seed of the unstructured corpus");
  }

  void run(const Globals& g) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    if (random_users > 0) {
      const auto d = random_corpus({seed, random_users, random_items, min_len, max_len, zipf});
      write_interactions(dir / "interactions.tsv", d);
      if (!g.quiet) {
        std::cout << fmt::format("wrote {} users, {} interactions to {}\n", d.sequences.size(),
                                 d.num_interactions(), (dir / "interactions.tsv").string());
      }
      return;
    }
    if (spec.empty()) throw ValidationError("synth needs --spec or --random-users");
    std::ifstream in(spec, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", spec));
    std::stringstream buf;
    buf << in.rdbuf();
    const auto plant = PlantSpec::from_json(buf.str());
    const auto corpus = generate(plant);
    write_interactions(dir / "train.tsv", corpus.train);
    write_instances(dir / "test.tsv", corpus.test, corpus.train.items, corpus.train.users);
    write_labels(dir / "expected_labels.tsv", corpus.test, corpus.expected, corpus.train.items,
                 corpus.train.users);
    if (corpus.sid) write_sid_map(dir / "sid.tsv", *corpus.sid, corpus.train.items);
    {
      std::ofstream js(dir / "spec.json", std::ios::binary);
      js << plant.to_json() << '\n';
      if (!js) throw IoError("cannot write spec.json");
    }
    if (!g.quiet) {
      const auto s = summarize(corpus.expected, plant.max_hop);
      write_tsv(std::cout, ratio_table(s, plant.max_hop));
    }
  }
};

int run_main(int argc, char** argv) {
  CLI::App app{"recmem: memorization and generalization analysis for sequential recommendation"};
  app.set_version_flag("--version", std::string(Provenance::current().version));
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config file (flags override it)")->envname("RECMEM_CONFIG");
  Globals g;
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_flag("--quiet", g.quiet, "do not print tables to stdout");

  IndexCmd index_cmd;
  index_cmd.setup(app);
  AttributeCmd attribute_cmd;
  attribute_cmd.setup(app);
  TokenMemCmd tokenmem_cmd;
  tokenmem_cmd.setup(app);
  EvaluateCmd evaluate_cmd;
  evaluate_cmd.setup(app);
  BinsCmd bins_cmd;
  bins_cmd.setup(app);
  auto* ensemble = app.add_subcommand("ensemble", "memorization-aware score fusion");
  ensemble->require_subcommand(1);
  ensemble->fallthrough();
  EnsembleRunCmd ens_run;
  ens_run.setup(ensemble);
  EnsembleTuneCmd ens_tune;
  ens_tune.setup(ensemble);
  SynthCmd synth_cmd;
  synth_cmd.setup(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (app.got_subcommand("index")) index_cmd.run(g);
    if (app.got_subcommand("attribute")) attribute_cmd.run(g);
    if (app.got_subcommand("tokenmem")) tokenmem_cmd.run(g);
    if (app.got_subcommand("evaluate")) evaluate_cmd.run(g);
    if (app.got_subcommand("bins")) bins_cmd.run(g);
    if (ens_run.sub->parsed()) ens_run.run(g);
    if (ens_tune.sub->parsed()) ens_tune.run(g);
    if (app.got_subcommand("synth")) synth_cmd.run(g);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace
}  // namespace recmem::cli

int main(int argc, char** argv) { return recmem::cli::run_main(argc, argv); }
