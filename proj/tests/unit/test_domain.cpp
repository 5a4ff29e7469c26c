#include <doctest.h>

#include "fixtures.hpp"
#include "recmem/domain.hpp"
#include "recmem/error.hpp"
#include "recmem/synthgen.hpp"

using namespace recmem;
using recmem::testing::fixture;
using recmem::testing::names;

using Names = std::vector<std::string>;

TEST_CASE("leave-last-out on a four-item sequence") {
  auto f = fixture({{"A", "B", "C", "D"}});
  const auto split = make_instances(f.train);
  REQUIRE(split.train.sequences.size() == 1);
  CHECK(names(split.train, split.train.sequences[0].items) == Names{"A", "B"});
  REQUIRE(split.validation.size() == 1);
  CHECK(names(split.train, split.validation[0].history) == Names{"A", "B"});
  CHECK(split.train.items.raw(split.validation[0].target) == "C");
  REQUIRE(split.test.size() == 1);
  CHECK(names(split.train, split.test[0].history) == Names{"A", "B", "C"});
  CHECK(split.train.items.raw(split.test[0].target) == "D");
}

TEST_CASE("sequences shorter than three stay in training") {
  auto f = fixture({{"A", "B"}});
  const auto split = make_instances(f.train);
  CHECK(split.test.empty());
  CHECK(split.validation.empty());
  REQUIRE(split.train.sequences.size() == 1);
  CHECK(names(split.train, split.train.sequences[0].items) == Names{"A", "B"});
}

TEST_CASE("two sequences give two test instances") {
  auto f = fixture({{"A", "B", "C", "D"}, {"E", "F", "G"}});
  const auto split = make_instances(f.train);
  REQUIRE(split.test.size() == 2);
  CHECK(split.train.items.raw(split.test[0].target) == "D");
  CHECK(split.train.items.raw(split.test[1].target) == "G");
  CHECK(split.test[0].user != split.test[1].user);
}

TEST_CASE("empty dataset is rejected") {
  Dataset empty;
  CHECK_THROWS_WITH_AS(make_instances(empty), doctest::Contains("no sequences"), ValidationError);
}

TEST_CASE("validate catches empty sequences and out-of-range items") {
  auto f = fixture({{"A"}});
  f.train.sequences.push_back(Sequence{0, {}});
  CHECK_THROWS_AS(f.train.validate(), ValidationError);
  auto g = fixture({{"A"}});
  g.train.sequences[0].items.push_back(99);
  CHECK_THROWS_AS(g.train.validate(), ValidationError);
}

TEST_CASE("dictionary round-trips raw ids in first-appearance order") {
  IdDictionary dict;
  const std::vector<std::string> raw = {"x", "y", "x", "zz", "y", ""};
  std::vector<std::uint32_t> ids;
  for (const auto& r : raw) ids.push_back(dict.intern(r));
  CHECK(ids == std::vector<std::uint32_t>{0, 1, 0, 2, 1, 3});
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(dict.raw(ids[i]) == raw[i]);
  CHECK(dict.find("zz") == 2u);
  CHECK_FALSE(dict.find("missing").has_value());
}

TEST_CASE("property: train prefix + validation target + test target rebuild the sequence") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomCorpusSpec spec;
    spec.seed = seed;
    spec.users = 50;
    spec.items = 30;
    const Dataset d = random_corpus(spec);
    const auto split = make_instances(d);
    std::size_t t = 0;
    for (std::size_t s = 0; s < d.sequences.size(); ++s) {
      const auto& orig = d.sequences[s].items;
      const auto& train = split.train.sequences[s].items;
      if (orig.size() < 3) {
        CHECK(train == orig);
        continue;
      }
      REQUIRE(t < split.test.size());
      const auto& val = split.validation[t];
      const auto& test = split.test[t];
      CHECK(val.history == train);
      std::vector<ItemId> rebuilt = train;
      rebuilt.push_back(val.target);
      CHECK(test.history == rebuilt);
      rebuilt.push_back(test.target);
      CHECK(rebuilt == orig);
      ++t;
    }
    CHECK(t == split.test.size());
  }
}
