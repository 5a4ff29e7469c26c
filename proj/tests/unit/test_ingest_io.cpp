#include <doctest.h>

#include <filesystem>
#include <algorithm>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "recmem/error.hpp"
#include "recmem/ingest_io.hpp"
#include "recmem/synthgen.hpp"

using namespace recmem;

namespace {

std::vector<RawSequence> raw_from(const Dataset& d) {
  std::vector<RawSequence> out;
  for (const auto& s : d.sequences) {
    RawSequence r{d.users.raw(s.user), {}};
    for (ItemId i : s.items) r.items.push_back(d.items.raw(i));
    out.push_back(std::move(r));
  }
  return out;
}

bool same_raw(const Dataset& a, const Dataset& b) {
  const auto ra = raw_from(a), rb = raw_from(b);
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].user != rb[i].user || ra[i].items != rb[i].items) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("parse interactions") {
  std::istringstream in("user\titems\n# comment\nu1\ta,b,c\r\n\nu2\tb,d\n");
  const auto d = parse_interactions(in);
  REQUIRE(d.sequences.size() == 2);
  CHECK(d.num_items() == 4);
  CHECK(d.items.raw(d.sequences[1].items[1]) == "d");
  const auto st = dataset_stats(d);
  CHECK(st.users == 2);
  CHECK(st.interactions == 5);
  CHECK(st.avg_length == doctest::Approx(2.5));
}

TEST_CASE("interaction parse errors carry line numbers") {
  auto err = [](std::string text) {
    std::istringstream in(text);
    try {
      parse_interactions(in, std::nullopt, "f.tsv");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(err("u1\ta,b\nu2\n").find("f.tsv:2:") != std::string::npos);
  CHECK(err("u1\ta,,b\n").find("f.tsv:1: empty item id") != std::string::npos);
  CHECK(err("u1\ta\nu1\tb\n").find("duplicate user") != std::string::npos);
  CHECK(err("# only a comment\n").find("empty interactions file") != std::string::npos);
}

TEST_CASE("missing file is an I/O error") {
  CHECK_THROWS_AS(read_interactions("/nonexistent/x.tsv"), IoError);
}

TEST_CASE("k-core removes rare items and re-checks the fixpoint") {
  // X occurs once; dropping it leaves u3 with one interaction, which then
  // drops u3 and leaves item c with a single occurrence.
  std::vector<RawSequence> seqs = {
      {"u1", {"a", "b", "a", "b"}},
      {"u2", {"b", "a", "c"}},
      {"u3", {"X", "c"}},
  };
  const auto out = kcore_filter(seqs, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0].items == std::vector<std::string>{"a", "b", "a", "b"});
  CHECK(out[1].items == std::vector<std::string>{"b", "a"});
}

TEST_CASE("property: k-core output satisfies the degree bound and is a fixpoint") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    RandomCorpusSpec spec;
    spec.seed = seed;
    spec.users = 80;
    spec.items = 60;
    spec.max_length = 9;
    spec.zipf = 1.1;
    const auto raw = raw_from(random_corpus(spec));
    for (std::size_t k : {2u, 3u, 5u}) {
      const auto out = kcore_filter(raw, k);
      std::map<std::string, std::size_t> item_deg;
      for (const auto& s : out) {
        CHECK(s.items.size() >= k);
        for (const auto& i : s.items) ++item_deg[i];
      }
      for (const auto& [item, deg] : item_deg) CHECK(deg >= k);
      const auto again = kcore_filter(out, k);
      CHECK(again.size() == out.size());
    }
  }
}

TEST_CASE("interactions round-trip") {
  RandomCorpusSpec spec;
  spec.seed = 4;
  const auto d = random_corpus(spec);
  std::stringstream buf;
  write_interactions(buf, d);
  const auto back = parse_interactions(buf);
  CHECK(same_raw(d, back));
}

TEST_CASE("timestamped triples group per user with stable ties") {
  std::istringstream in("u1\ta\t5\nu2\tx\t1\nu1\tb\t3\nu1\tc\t5\nu2\ty\t0\n");
  const auto seqs = parse_timestamped(in);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0].user == "u1");
  CHECK(seqs[0].items == std::vector<std::string>{"b", "a", "c"});
  CHECK(seqs[1].items == std::vector<std::string>{"y", "x"});
  std::istringstream bad("u1\ta\tsoon\n");
  CHECK_THROWS_WITH_AS(parse_timestamped(bad), doctest::Contains("bad timestamp"), ValidationError);
}

TEST_CASE("instances round-trip and intern unseen ids") {
  auto f = recmem::testing::fixture({{"A", "B"}});
  std::istringstream in("user\thistory\ttarget\nv1\tA,B\tNEW\n");
  const auto insts = parse_instances(in, f.train.items, f.train.users);
  REQUIRE(insts.size() == 1);
  CHECK(f.train.items.raw(insts[0].target) == "NEW");
  std::stringstream buf;
  write_instances(buf, insts, f.train.items, f.train.users);
  const auto back = parse_instances(buf, f.train.items, f.train.users);
  CHECK(back[0].history == insts[0].history);
  CHECK(back[0].target == insts[0].target);
  std::istringstream empty_hist("v1\t\tA\n");
  CHECK_THROWS_AS(parse_instances(empty_hist, f.train.items, f.train.users), ValidationError);
}

TEST_CASE("predictions parse and validation errors") {
  auto f = recmem::testing::fixture({{"a", "b", "c"}});
  f.train.users.intern("u1");
  auto parse = [&](std::string text, bool prob) {
    std::istringstream in(text);
    return parse_predictions(in, f.train.items, f.train.users, prob, "p.tsv");
  };
  const auto ok = parse("u1\ta:0.5,b:0.3\n", true);
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].ranked.size() == 2);
  CHECK(ok[0].ranked[0].score == 0.5);
  CHECK_THROWS_WITH_AS(parse("u1\ta:0.3,b:0.5\n", false), doctest::Contains("non-monotone"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse("user\tpredictions\nu1\ta:0.9,b:0.8\n", true),
                       doctest::Contains("p.tsv:2: not a sub-distribution"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("nobody\ta:0.5\n", false), doctest::Contains("unknown user"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("u1\tzzz:0.5\n", false), doctest::Contains("unknown item"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("u1\ta:0.5,a:0.1\n", false), doctest::Contains("duplicate item"), ValidationError);
  CHECK_THROWS_WITH_AS(parse("u1\ta:0.5\nu1\tb:0.4\n", false), doctest::Contains("p.tsv:2: duplicate user"),
                       ValidationError);
}

TEST_CASE("predictions round-trip bit-exactly and align to instances") {
  auto f = recmem::testing::fixture({{"a", "b", "c"}});
  const UserId u1 = f.train.users.intern("u1"), u2 = f.train.users.intern("u2");
  std::vector<PredictionList> preds(2);
  preds[0].user = u2;
  preds[0].ranked = {{0, 0.1 + 0.2}, {2, 1.0 / 3.0}};
  std::swap(preds[0].ranked[0], preds[0].ranked[1]);
  preds[1].user = u1;
  preds[1].ranked = {{1, 1e-17}};
  std::stringstream buf;
  write_predictions(buf, preds, f.train.items, f.train.users);
  const auto back = parse_predictions(buf, f.train.items, f.train.users, false);
  REQUIRE(back.size() == 2);
  CHECK(back[0].ranked == preds[0].ranked);
  CHECK(back[1].ranked == preds[1].ranked);

  std::vector<Instance> insts(2);
  insts[0].user = u1;
  insts[1].user = u2;
  const auto aligned = align_predictions(back, insts);
  CHECK(aligned[0].user == u1);
  CHECK(aligned[1].user == u2);
  insts.push_back(Instance{f.train.users.intern("u3"), {0}, 1});
  CHECK_THROWS_AS(align_predictions(back, insts), ValidationError);
}

TEST_CASE("labels round-trip") {
  PlantSpec spec;
  spec.seed = 5;
  spec.memorization = 2;
  spec.substitutability = {{2, 1}};
  spec.second_symmetry[SecondSymmetryKind::kReversePath] = {{3, 1}};
  spec.symmetry = {{1, 1}};
  spec.uncategorized = 1;
  auto corpus = generate(spec);
  std::stringstream buf;
  write_labels(buf, corpus.test, corpus.expected, corpus.train.items, corpus.train.users);
  CHECK(buf.str().rfind("user\ttarget\tmem\tsubst_hop\tsym_hop\ttrans_hop\tsecond_sym_hop\tsecond_sym_kind\tuncategorized\n", 0) == 0);
  const auto rows = parse_labels(buf, corpus.train.items, corpus.train.users);
  REQUIRE(rows.size() == corpus.expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].record == corpus.expected[i]);
    CHECK(rows[i].user == corpus.test[i].user);
    CHECK(rows[i].target == corpus.test[i].target);
  }
  std::istringstream bad("u\tt\t1\t2\t-\t-\t-\t-\t0\n");
  CHECK_THROWS_WITH_AS(parse_labels(bad, corpus.train.items, corpus.train.users),
                       doctest::Contains("memorization row"), ValidationError);
}

TEST_CASE("sid map parse, validation and round-trip") {
  auto f = recmem::testing::fixture({{"a", "b"}});
  std::istringstream in("item\ttokens\na\t0 1 2\nb\t0 1 3\nother\t9 9 9\n");
  const auto map = parse_sid_map(in, f.train.items);
  CHECK(map.length() == 3);
  CHECK(map.codebook_sizes() == std::vector<std::uint32_t>{1, 2, 4});
  CHECK(map.tokens(f.id("b"))[2] == 3);
  std::stringstream buf;
  write_sid_map(buf, map, f.train.items);
  const auto back = parse_sid_map(buf, f.train.items);
  CHECK(std::ranges::equal(back.tokens(f.id("a")), map.tokens(f.id("a"))));

  auto err = [&](std::string text) {
    std::istringstream s(text);
    return parse_sid_map(s, f.train.items);
  };
  CHECK_THROWS_WITH_AS(err("a\t0 1\nb\t0 1 2\n"), doctest::Contains("ragged"), ValidationError);
  CHECK_THROWS_WITH_AS(err("a\t0 1\na\t0 2\n"), doctest::Contains("duplicate item"), ValidationError);
  CHECK_THROWS_AS(err("a\t0 1\nb\t0 1\n"), ValidationError);
}

TEST_CASE("file round-trip through the filesystem") {
  const auto dir = std::filesystem::temp_directory_path() / "recmem_ingest_test";
  std::filesystem::create_directories(dir);
  RandomCorpusSpec spec;
  spec.seed = 8;
  const auto d = random_corpus(spec);
  write_interactions(dir / "d.tsv", d);
  CHECK(same_raw(d, read_interactions(dir / "d.tsv")));
  CHECK_THROWS_AS(write_interactions(dir / "missing_dir" / "d.tsv", d), IoError);
  std::filesystem::remove_all(dir);
}
