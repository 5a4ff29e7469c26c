#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "recmem/attribution.hpp"
#include "recmem/id_set.hpp"
#include "recmem/synthgen.hpp"
#include "recmem/transition_index.hpp"

namespace {

using namespace recmem;

const SplitResult& corpus(std::size_t users) {
  static std::map<std::size_t, SplitResult> cache;
  auto it = cache.find(users);
  if (it == cache.end()) {
    RandomCorpusSpec spec;
    spec.seed = 7;
    spec.users = users;
    spec.items = users / 5 + 10;
    spec.min_length = 3;
    spec.max_length = 20;
    spec.zipf = 0.8;
    it = cache.emplace(users, make_instances(random_corpus(spec))).first;
  }
  return it->second;
}

void BM_IndexBuild(benchmark::State& state) {
  const auto& split = corpus(static_cast<std::size_t>(state.range(0)));
  const auto threads = static_cast<unsigned>(state.range(1));
  for (auto _ : state) {
    auto idx = TransitionIndex::build(split.train, 4, threads);
    benchmark::DoNotOptimize(idx);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(split.train.num_interactions()));
}
BENCHMARK(BM_IndexBuild)->Args({5000, 1})->Args({20000, 1})->Args({20000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_AttributeAll(benchmark::State& state) {
  const auto& split = corpus(static_cast<std::size_t>(state.range(0)));
  const auto idx = TransitionIndex::build(split.train, 4, 1);
  AttributionConfig cfg;
  cfg.max_hop = 4;
  cfg.match = state.range(1) == 0 ? MatchMode::kAdjacent : MatchMode::kAnyGap;
  for (auto _ : state) {
    auto res = attribute_all(idx, split.test, cfg, 1);
    benchmark::DoNotOptimize(res);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(split.test.size()));
}
BENCHMARK(BM_AttributeAll)->Args({5000, 0})->Args({5000, 1})->Args({20000, 0})->Unit(benchmark::kMillisecond);

std::vector<ItemId> sorted_sample(std::mt19937_64& rng, std::size_t n, ItemId universe) {
  std::uniform_int_distribution<ItemId> dist(0, universe - 1);
  std::vector<ItemId> v(n);
  for (auto& x : v) x = dist(rng);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Small set against a large one with no common element, the worst case for
// the intersection used by the bridge checks.
void BM_FirstCommon(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const auto small_n = static_cast<std::size_t>(state.range(0));
  const auto large_n = static_cast<std::size_t>(state.range(1));
  auto a = sorted_sample(rng, small_n, 1U << 24);
  auto b = sorted_sample(rng, large_n, 1U << 24);
  for (auto& x : a) x = x * 2 + 1;
  for (auto& x : b) x = x * 2;
  for (auto _ : state) benchmark::DoNotOptimize(first_common(a, b));
}
BENCHMARK(BM_FirstCommon)->Args({8, 100000})->Args({1000, 100000})->Args({50000, 50000});

}  // namespace
BENCHMARK_MAIN();
