// Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//
//   recmem_acceptance            run every criterion
//   recmem_acceptance --only N   run criterion N (exit 0 pass, 1 fail, 77 skip)

#include <fmt/format.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/ensemble.hpp"
#include "recmem/ingest_io.hpp"
#include "recmem/metrics.hpp"
#include "recmem/synthgen.hpp"
#include "recmem/token_lens.hpp"
#include "recmem/transition_index.hpp"

namespace fs = std::filesystem;
using namespace recmem;

namespace {

// Pinned budgets and tolerances.
constexpr std::size_t kOracleCorpora = 100;
constexpr std::size_t kOracleMaxUsers = 300;
constexpr std::size_t kOracleMaxItems = 60;
constexpr std::size_t kOracleMaxLength = 15;
constexpr int kMaxHop = 4;
constexpr double kOracleBudgetSeconds = 30.0;
constexpr double kPercentSumTolerance = 1e-9;
constexpr double kMetricTolerance = 1e-12;
constexpr double kAlphaTolerance = 1e-12;
constexpr std::size_t kTopK = 10;
constexpr std::size_t kScaleInteractions = 500'000;
constexpr double kScaleBudgetSeconds = 60.0;
constexpr unsigned kScaleThreads = 8;
constexpr double kScaleMinSpeedup = 3.0;
constexpr double kBeautyMemPercent = 8.6;
constexpr double kBeautyMemTolerance = 1.5;
constexpr double kBeautyUncatPercent = 10.1;
constexpr double kBeautyUncatTolerance = 2.0;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / fmt::format("recmem_accept_{}_{}", tag, ::getpid());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

#ifdef RECMEM_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("{} {} >/dev/null 2>&1", RECMEM_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

// ---- corpora shared by criteria 1 and 2

struct OracleCorpus {
  SplitResult split;
  std::vector<Instance> instances;  // validation + test
};

OracleCorpus oracle_corpus(std::uint64_t seed) {
  Rng rng(seed * 0x9e3779b97f4a7c15ULL);
  RandomCorpusSpec spec;
  spec.seed = seed;
  spec.users = 20 + rng.below(kOracleMaxUsers - 20 + 1);
  spec.items = 5 + rng.below(kOracleMaxItems - 5 + 1);
  spec.min_length = 1;
  spec.max_length = 2 + rng.below(kOracleMaxLength - 1);
  spec.zipf = static_cast<double>(rng.below(4)) * 0.5;
  OracleCorpus c{make_instances(random_corpus(spec)), {}};
  c.instances = c.split.validation;
  c.instances.insert(c.instances.end(), c.split.test.begin(), c.split.test.end());
  return c;
}

// ---- criterion 1

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  std::size_t instances = 0, mismatches = 0;
  std::array<std::size_t, 3> mix{};  // mem / gen / uncat under adjacent matching
  for (std::uint64_t seed = 1; seed <= kOracleCorpora; ++seed) {
    const auto c = oracle_corpus(seed);
    const auto idx = TransitionIndex::build(c.split.train, kMaxHop);
    const BruteForceAttributor oracle(c.split.train);
    for (auto mode : {MatchMode::kAdjacent, MatchMode::kAnyGap}) {
      const AttributionConfig cfg{kMaxHop, mode};
      const auto got = attribute_all(idx, c.instances, cfg).records;
      for (std::size_t i = 0; i < c.instances.size(); ++i) {
        mismatches += !(got[i] == oracle.attribute(c.instances[i], cfg));
        if (mode == MatchMode::kAdjacent) ++mix[got[i].memorization ? 0 : got[i].uncategorized ? 2 : 1];
      }
    }
    instances += c.instances.size();
  }
  const double secs = seconds_since(start);
  const bool ok = mismatches == 0 && secs < kOracleBudgetSeconds;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} corpora, {} instances x 2 match modes (mem/gen/uncat {}/{}/{}), {} mismatches, "
                      "{:.2f} s (budget {:.0f} s)",
                      kOracleCorpora, instances, mix[0], mix[1], mix[2], mismatches, secs,
                      kOracleBudgetSeconds)};
}

// ---- criterion 2

Outcome partition_and_minimality() {
  std::size_t bad_partition = 0, bad_sum = 0, bad_minimal = 0, checked_hops = 0;
  for (std::uint64_t seed = 1; seed <= kOracleCorpora; ++seed) {
    const auto c = oracle_corpus(seed);
    const auto idx = TransitionIndex::build(c.split.train, kMaxHop);
    const AttributionConfig cfg{kMaxHop, MatchMode::kAdjacent};
    const auto result = attribute_all(idx, c.instances, cfg);
    const auto& s = result.summary;
    if (s.memorization + s.generalization + s.uncategorized != s.total) ++bad_partition;
    const double sum = s.percent(s.memorization) + s.percent(s.generalization) + s.percent(s.uncategorized);
    if (s.total > 0 && std::abs(sum - 100.0) > kPercentSumTolerance) ++bad_sum;
    for (std::size_t i = 0; i < c.instances.size(); ++i) {
      const auto& r = result.records[i];
      const int flags = int(r.memorization) + int(r.generalization()) + int(r.uncategorized);
      if (flags != 1) ++bad_partition;
      // Every reported hop k must vanish when hops are capped at k - 1.
      auto recheck = [&](std::optional<int> hop, std::optional<int> CategoryRecord::*field) {
        if (!hop) return;
        ++checked_hops;
        if (*hop == 1) return;
        const auto lower = attribute(idx, c.instances[i], AttributionConfig{*hop - 1, cfg.match});
        if ((lower.*field).has_value()) ++bad_minimal;
      };
      recheck(r.substitutability_hop, &CategoryRecord::substitutability_hop);
      recheck(r.symmetry_hop, &CategoryRecord::symmetry_hop);
      recheck(r.transitivity_hop, &CategoryRecord::transitivity_hop);
      recheck(r.second_symmetry_hop, &CategoryRecord::second_symmetry_hop);
    }
  }
  const bool ok = bad_partition == 0 && bad_sum == 0 && bad_minimal == 0;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} corpora; partition violations {}, percent-sum violations {}, "
                      "{} hops re-checked with {} non-minimal",
                      kOracleCorpora, bad_partition, bad_sum, checked_hops, bad_minimal)};
}

// ---- criterion 3

struct PlantedCase {
  std::string name;
  PlantSpec spec;
  double mem, gen, uncat;  // planted percentages
};

std::vector<PlantedCase> planted_cases() {
  std::vector<PlantedCase> cases;
  {
    PlantSpec s;
    s.seed = 30;
    s.memorization = 3;
    s.symmetry = {{1, 1}, {2, 1}};
    s.transitivity = {{1, 1}};
    s.substitutability = {{3, 1}};
    s.second_symmetry[SecondSymmetryKind::kCommonCause] = {{2, 1}};
    s.uncategorized = 2;
    cases.push_back({"30/50/20 (10 instances)", s, 30, 50, 20});
  }
  {
    PlantSpec s;
    s.seed = 31;
    s.memorization = 300;
    s.substitutability = {{2, 40}, {3, 30}, {4, 30}};
    s.symmetry = {{1, 40}, {2, 20}, {3, 10}, {4, 10}};
    s.transitivity = {{1, 60}, {2, 40}, {3, 20}, {4, 20}};
    s.second_symmetry[SecondSymmetryKind::kCommonCause] = {{1, 30}, {2, 20}};
    s.second_symmetry[SecondSymmetryKind::kCommonEffect] = {{1, 30}, {3, 20}};
    s.second_symmetry[SecondSymmetryKind::kReversePath] = {{2, 40}, {4, 40}};
    s.uncategorized = 200;
    s.filler_sequences = 2000;
    s.filler_items = 500;
    cases.push_back({"30/50/20 (1000 instances, fillers)", s, 30, 50, 20});
  }
  {
    PlantSpec s;
    s.seed = 32;
    s.memorization = 7;
    s.transitivity = {{2, 6}};
    s.symmetry = {{4, 4}};
    s.uncategorized = 3;
    cases.push_back({"35/50/15 (20 instances)", s, 35, 50, 15});
  }
  return cases;
}

Outcome planted_recovery() {
  std::vector<std::string> notes;
  bool ok = true;
  for (const auto& pc : planted_cases()) {
    const auto corpus = generate(pc.spec);
    std::vector<CategoryRecord> got;
    RatioSummary s;
#ifdef RECMEM_CLI_PATH
    TempDir tmp("planted");
    const auto spec_path = tmp.path / "spec.json";
    std::ofstream(spec_path) << pc.spec.to_json();
    const auto dir = tmp.path / "corpus";
    if (run_cli(fmt::format("synth --spec {} --out-dir {}", spec_path.string(), dir.string())) != 0 ||
        run_cli(fmt::format("--quiet attribute --train {} --instances {} --max-hop {} --labels {}",
                            (dir / "train.tsv").string(), (dir / "test.tsv").string(), kMaxHop,
                            (tmp.path / "labels.tsv").string())) != 0) {
      ok = false;
      notes.push_back(pc.name + ": CLI failed");
      continue;
    }
    IdDictionary items = corpus.train.items, users = corpus.train.users;
    for (const auto& row : read_labels(tmp.path / "labels.tsv", items, users)) got.push_back(row.record);
    s = summarize(got, kMaxHop);
#else
    const auto idx = TransitionIndex::build(corpus.train, kMaxHop);
    auto result = attribute_all(idx, corpus.test, AttributionConfig{kMaxHop, MatchMode::kAdjacent});
    got = std::move(result.records);
    s = result.summary;
#endif
    const bool labels_ok = got == corpus.expected;
    const bool ratios_ok = s.percent(s.memorization) == pc.mem && s.percent(s.generalization) == pc.gen &&
                           s.percent(s.uncategorized) == pc.uncat;
    ok = ok && labels_ok && ratios_ok;
    notes.push_back(fmt::format("{}: {:.2f}/{:.2f}/{:.2f}{}", pc.name, s.percent(s.memorization),
                                s.percent(s.generalization), s.percent(s.uncategorized),
                                labels_ok ? "" : " (label mismatch)"));
  }
  return {ok ? Status::kPass : Status::kFail, fmt::format("{}", fmt::join(notes, "; "))};
}

// ---- criterion 4

Outcome prefix_lens_invariance() {
  RandomCorpusSpec spec;
  spec.seed = 404;
  spec.users = 4000;
  spec.items = 2000;
  spec.min_length = 3;
  spec.max_length = 15;
  spec.zipf = 1.0;
  const auto split = make_instances(random_corpus(spec));
  const std::size_t L = 3;
  const auto map_a = random_sid_map(split.train.num_items(), SidSpec{L, 16, 0.3}, 1);
  const auto map_b = random_sid_map(split.train.num_items(), SidSpec{L, 64, 0.6}, 2);
  const auto idx = TransitionIndex::build(split.train, kMaxHop);
  const auto pa = PrefixTransitionIndex::build(split.train, idx, map_a, L);
  const auto pb = PrefixTransitionIndex::build(split.train, idx, map_b, L);
  const auto ba = token_memorization_buckets(pa, split.test, kMaxHop);
  const auto bb = token_memorization_buckets(pb, split.test, kMaxHop);

  std::size_t membership_diff = 0, exact_diff = 0, monotone_violations = 0;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const auto& inst = split.test[i];
    const bool in_a = ba.per_instance[i] == L, in_b = bb.per_instance[i] == L;
    membership_diff += in_a != in_b;
    bool exact = false;
    const int limit = std::min<int>(kMaxHop, static_cast<int>(inst.history.size()));
    for (int k = 1; k <= limit; ++k) {
      exact = exact || idx.contains({inst.back(static_cast<std::size_t>(k)), inst.target, k});
    }
    exact_diff += in_a != exact;
    for (const auto* p : {&pa, &pb}) {
      std::optional<int> prev;
      for (std::size_t n = L; n >= 1; --n) {
        const auto hop = prefix_memorizable(*p, inst, n, kMaxHop);
        if (prev && (!hop || *hop > *prev)) ++monotone_violations;
        if (hop) prev = hop;
        else if (prev) ++monotone_violations;
      }
    }
  }
  const bool ratio_equal = ba.percent(L) == bb.percent(L);
  const bool ok = membership_diff == 0 && exact_diff == 0 && monotone_violations == 0 && ratio_equal;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} instances; n=L ratio {:.2f}% vs {:.2f}%, membership differences {}, "
                      "exact-pair mismatches {}, monotonicity violations {}; lower buckets "
                      "n=2 {:.2f}/{:.2f}, n=1 {:.2f}/{:.2f}, n=0 {:.2f}/{:.2f}",
                      split.test.size(), ba.percent(L), bb.percent(L), membership_diff, exact_diff,
                      monotone_violations, ba.percent(2), bb.percent(2), ba.percent(1), bb.percent(1),
                      ba.percent(0), bb.percent(0))};
}

// ---- criterion 5

Outcome metric_correctness() {
  auto list_with_target_at = [](std::size_t rank) {
    PredictionList p;
    for (std::size_t r = 1; r <= 20; ++r) {
      p.ranked.push_back({r == rank ? ItemId{0} : static_cast<ItemId>(100 + r), 1.0 / static_cast<double>(r)});
    }
    return p;
  };
  struct Check {
    const char* what;
    double got;
    double want;
  };
  const Check checks[] = {
      {"ndcg rank 1", ndcg_at_k(list_with_target_at(1), 0, kTopK), 1.0},
      {"ndcg rank 3", ndcg_at_k(list_with_target_at(3), 0, kTopK), 0.5},
      {"ndcg absent", ndcg_at_k(list_with_target_at(0), 0, kTopK), 0.0},
      {"ndcg rank 11", ndcg_at_k(list_with_target_at(11), 0, kTopK), 0.0},
      {"ndcg rank 7", ndcg_at_k(list_with_target_at(7), 0, kTopK), 1.0 / 3.0},
      {"recall rank 1", recall_at_k(list_with_target_at(1), 0, kTopK), 1.0},
      {"recall rank 10", recall_at_k(list_with_target_at(10), 0, kTopK), 1.0},
      {"recall rank 11", recall_at_k(list_with_target_at(11), 0, kTopK), 0.0},
      {"recall absent", recall_at_k(list_with_target_at(0), 0, kTopK), 0.0},
      {"recall empty", recall_at_k(PredictionList{}, 0, kTopK), 0.0},
  };
  double worst = 0.0;
  std::vector<std::string> failed;
  for (const auto& c : checks) {
    const double err = std::abs(c.got - c.want);
    worst = std::max(worst, err);
    if (err > kMetricTolerance) failed.push_back(c.what);
  }
  return {failed.empty() ? Status::kPass : Status::kFail,
          fmt::format("{} closed-form checks, max abs error {:.3g} (tolerance {:.0e}){}",
                      std::size(checks), worst, kMetricTolerance,
                      failed.empty() ? "" : fmt::format("; failed: {}", fmt::join(failed, ", ")))};
}

// ---- criterion 6

Outcome ensemble_reductions() {
  Rng rng(606);
  std::size_t lists = 0, prefix_failures = 0;
  auto random_list = [&](bool prob, UserId user) {
    PredictionList p;
    p.user = user;
    p.is_probability = prob;
    const std::size_t len = kTopK + 1 + rng.below(30);
    std::vector<ItemId> pool(80);
    for (ItemId i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    double score = prob ? 0.5 : 10.0;
    for (std::size_t r = 0; r < len; ++r) {
      p.ranked.push_back({pool[r], score});
      score *= 0.5 + 0.4 * rng.unit();
    }
    return p;
  };
  auto top_k = [](const PredictionList& p) {
    std::vector<ItemId> out;
    for (std::size_t i = 0; i < std::min(kTopK, p.ranked.size()); ++i) out.push_back(p.ranked[i].item);
    return out;
  };
  for (UserId u = 0; u < 500; ++u) {
    const auto id = random_list(true, u), gr = random_list(false, u);
    for (auto norm : {Normalization::kMinMax, Normalization::kRankReciprocal}) {
      prefix_failures += top_k(fuse_with_alpha(id, gr, 1.0, norm).fused) != top_k(gr);
      prefix_failures += top_k(fuse_with_alpha(id, gr, 0.0, norm).fused) != top_k(id);
      ++lists;
    }
  }
  double alpha_err = 0.0;
  for (double q : {0.0, 1.0, 5.0, 9.0, 13.0}) {
    for (double tau : {-1.0, 0.0, 0.1, 0.2, 0.5, 0.9}) {
      alpha_err = std::max(alpha_err, std::abs(alpha_weight(tau, q, tau) - 0.5));
    }
  }
  // Grid enumeration on a small validation set.
  std::vector<PredictionList> vid, vgr;
  std::vector<ItemId> targets;
  for (UserId u = 0; u < 20; ++u) {
    vid.push_back(random_list(true, u));
    vgr.push_back(random_list(false, u));
    targets.push_back(vgr.back().ranked[rng.below(5)].item);
  }
  const auto tuned = tune(targets, vid, vgr, TuneGrids::defaults(), Normalization::kMinMax, kTopK);
  const bool ok = prefix_failures == 0 && alpha_err <= kAlphaTolerance && tuned.adaptive.size() == 24 &&
                  tuned.fixed.size() == 11;
  return {ok ? Status::kPass : Status::kFail,
          fmt::format("{} fusions at alpha 1/0, {} top-{} prefix mismatches; |alpha(tau) - 0.5| max {:.3g}; "
                      "tuning evaluated {} adaptive + {} fixed configs",
                      2 * lists, prefix_failures, kTopK, alpha_err, tuned.adaptive.size(), tuned.fixed.size())};
}

// ---- criterion 7

Outcome scale_budget() {
  RandomCorpusSpec spec;
  spec.seed = 707;
  spec.items = 12'000;
  spec.min_length = 5;
  spec.max_length = 15;  // mean length 10
  spec.users = kScaleInteractions / 10;
  spec.zipf = 1.0;
  const Dataset corpus = random_corpus(spec);
  const std::size_t interactions = corpus.num_interactions();

  auto time_run = [&](unsigned threads, const fs::path& file) -> double {
    const auto start = Clock::now();
#ifdef RECMEM_CLI_PATH
    const int rc = run_cli(fmt::format("--threads {} --quiet attribute --interactions {} --max-hop {}",
                                       threads, file.string(), kMaxHop));
    if (rc != 0) return -1.0;
#else
    (void)file;
    const auto split = make_instances(corpus);
    const auto idx = TransitionIndex::build(split.train, kMaxHop, threads);
    attribute_all(idx, split.test, AttributionConfig{}, threads);
#endif
    return seconds_since(start);
  };

  TempDir tmp("scale");
  const auto file = tmp.path / "interactions.tsv";
  write_interactions(file, corpus);
  const double single = time_run(1, file);
  const double multi = time_run(kScaleThreads, file);
  if (single < 0 || multi < 0) return {Status::kFail, "attribute run failed"};
  const double speedup = single / multi;
  const unsigned cores = std::thread::hardware_concurrency();
  const bool budget_ok = single < kScaleBudgetSeconds;
  const bool speedup_ok = speedup >= kScaleMinSpeedup;
  return {budget_ok && speedup_ok ? Status::kPass : Status::kFail,
          fmt::format("{} interactions: 1 thread {:.2f} s (budget {:.0f} s, {}); {} threads {:.2f} s, "
                      "speedup {:.2f}x (need {:.1f}x, {}); host reports {} hardware thread(s)",
                      interactions, single, kScaleBudgetSeconds, budget_ok ? "met" : "missed", kScaleThreads,
                      multi, speedup, kScaleMinSpeedup, speedup_ok ? "met" : "missed", cores)};
}

// ---- criterion 8

Outcome beauty_reproduction() {
  const char* path = std::getenv("RECMEM_BEAUTY_PATH");
  if (path == nullptr || !fs::exists(path)) {
    return {Status::kSkip,
            "Amazon Beauty 2014 data not available (set RECMEM_BEAUTY_PATH to a user<TAB>item<TAB>timestamp "
            "file to run)"};
  }
  std::ifstream in(path);
  auto raw = kcore_filter(parse_timestamped(in, path), kDefaultKCore);
  const auto split = make_instances(build_dataset(raw));
  const auto idx = TransitionIndex::build(split.train, kMaxHop);
  const auto s = attribute_all(idx, split.test, AttributionConfig{}).summary;
  const double mem = s.percent(s.memorization), unc = s.percent(s.uncategorized);
  const bool within = std::abs(mem - kBeautyMemPercent) <= kBeautyMemTolerance &&
                      std::abs(unc - kBeautyUncatPercent) <= kBeautyUncatTolerance;
  // Soft criterion: a deviation is reported but does not fail the build.
  return {Status::kPass,
          fmt::format("{} test instances: memorization {:.2f}% (target {} +- {}), uncategorized {:.2f}% "
                      "(target {} +- {}){}",
                      s.total, mem, kBeautyMemPercent, kBeautyMemTolerance, unc, kBeautyUncatPercent,
                      kBeautyUncatTolerance, within ? "" : "; OUTSIDE tolerance (soft, not failing)")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "partition and hop minimality", partition_and_minimality},
      {3, "planted recovery", planted_recovery},
      {4, "prefix-lens invariance", prefix_lens_invariance},
      {5, "metric correctness", metric_correctness},
      {6, "ensemble reductions", ensemble_reductions},
      {7, "dataset-scale performance", scale_budget},
      {8, "Beauty ratio reproduction", beauty_reproduction},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      fmt::print(stderr, "usage: {} [--only N]\n", argv[0]);
      return 2;
    }
  }
  bool any_fail = false, any_skip = false, ran = false;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, fmt::format("exception: {}", e.what())};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    fmt::print("criterion {} [{}] {}: {}\n", c.id, tag, c.name, o.detail);
    std::fflush(stdout);
    any_fail = any_fail || o.status == Status::kFail;
    any_skip = any_skip || o.status == Status::kSkip;
  }
  if (!ran) {
    fmt::print(stderr, "no criterion {}\n", only);
    return 2;
  }
  if (any_fail) return 1;
  return only != 0 && any_skip ? 77 : 0;
}
