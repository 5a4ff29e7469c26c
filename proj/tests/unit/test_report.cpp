#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "recmem/error.hpp"
#include "recmem/report.hpp"

using namespace recmem;

namespace {

std::string tsv(const Table& t, const Provenance* prov = nullptr) {
  std::ostringstream out;
  write_tsv(out, t, prov);
  return out.str();
}

BreakdownReport sample_breakdown() {
  std::vector<CategoryRecord> recs(3);
  recs[0].memorization = true;
  recs[1].symmetry_hop = 2;
  recs[2].uncategorized = true;
  const std::vector<ModelScores> models = {{"SASRec", {0.37931, 0.5, 0.0}, {1, 1, 0}},
                                           {"TIGER", {1.0, 0.0, 0.0}, {1, 0, 0}}};
  return breakdown(recs, models, 10, 4);
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_metric(0.37931) == ".3793");
  CHECK(format_metric(0.0) == ".0000");
  CHECK(format_metric(1.0) == "1.0000");
  CHECK(format_metric(-0.25) == "-.2500");
  CHECK(format_ratio(8.6) == "8.60");
  CHECK(format_ratio(100.0 / 3.0) == "33.33");
  CHECK(Cell::missing().tsv() == "-");
}

TEST_CASE("breakdown table layout") {
  const auto t = breakdown_table(sample_breakdown());
  const std::string text = tsv(t);
  CHECK(text.rfind("cell\tcount\tratio\tSASRec N@10\tSASRec R@10\tTIGER N@10\tTIGER R@10\n", 0) == 0);
  CHECK(text.find("memorization\t1\t33.33\t.3793\t1.0000\t1.0000\t1.0000\n") != std::string::npos);
  CHECK(text.find("symmetry@1\t0\t0.00\t-\t-\t-\t-\n") != std::string::npos);
}

TEST_CASE("empty breakdown renders a header only") {
  const std::vector<ModelScores> models = {{"m", {}, {}}};
  const auto t = breakdown_table(breakdown({}, models, 10, 4));
  CHECK(tsv(t) == "cell\tcount\tratio\tm N@10\tm R@10\n");
}

TEST_CASE("rendering is byte-deterministic") {
  const auto t = breakdown_table(sample_breakdown());
  Provenance prov;
  prov.version = "1.2.3";
  prov.add_config("k", "10");
  CHECK(tsv(t, &prov) == tsv(breakdown_table(sample_breakdown()), &prov));
  std::ostringstream a, b;
  write_json(a, t, &prov);
  write_json(b, t, &prov);
  CHECK(a.str() == b.str());
}

TEST_CASE("json output keeps columns and nulls missing cells") {
  const auto t = breakdown_table(sample_breakdown());
  std::ostringstream out;
  write_json(out, t);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["table"] == "breakdown");
  CHECK(j["columns"].size() == 7);
  bool saw_null = false;
  for (const auto& row : j["rows"]) {
    if (row["cell"] == "symmetry@1") saw_null = row["SASRec N@10"].is_null();
    if (row["cell"] == "memorization") CHECK(row["SASRec N@10"].get<double>() == doctest::Approx(0.37931));
  }
  CHECK(saw_null);

  std::ostringstream many;
  write_json(many, std::vector<Table>{t, ratio_table(summarize({}, 4), 4)});
  const auto m = nlohmann::json::parse(many.str());
  CHECK(m["tables"].size() == 2);
}

TEST_CASE("provenance hashes inputs") {
  const auto path = std::filesystem::temp_directory_path() / "recmem_prov_test.txt";
  {
    std::ofstream f(path, std::ios::binary);
    f << "abc";
  }
  Provenance prov;
  prov.add_input("train", path);
  REQUIRE(prov.inputs.size() == 1);
  CHECK(prov.inputs[0].sha256 == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(prov.add_input("x", path), IoError);
  prov.add_config("max_hop", "4");
  const std::string text = tsv(Table{"t", {"a"}, {}, {}}, &prov);
  CHECK(text.find("# config\tmax_hop=4") != std::string::npos);
  CHECK(text.find("ba7816bf") != std::string::npos);
}

TEST_CASE("table rows must match the column count") {
  Table t{"t", {"a", "b"}, {}, {}};
  CHECK_THROWS_AS(t.add_row({Cell::int_of(1)}), ValidationError);
}

TEST_CASE("report format from path") {
  CHECK(format_for_path("x.json") == ReportFormat::kJson);
  CHECK(format_for_path("x.tsv") == ReportFormat::kTsv);
  CHECK(parse_report_format("json") == ReportFormat::kJson);
  CHECK_THROWS_AS(write_report("/nonexistent/dir/x.tsv", {Table{"t", {"a"}, {}, {}}}, ReportFormat::kTsv),
                  IoError);
}

TEST_CASE("ratio table sums and rows") {
  std::vector<CategoryRecord> recs(4);
  recs[0].memorization = true;
  recs[1].transitivity_hop = 1;
  recs[1].second_symmetry_hop = 1;
  recs[1].second_symmetry_kind = SecondSymmetryKind::kCommonEffect;
  recs[2].uncategorized = true;
  recs[3].uncategorized = true;
  const auto text = tsv(ratio_table(summarize(recs, 4), 4));
  CHECK(text.find("memorization\t-\t1\t25.00\n") != std::string::npos);
  CHECK(text.find("generalization\t-\t1\t25.00\n") != std::string::npos);
  CHECK(text.find("uncategorized\t-\t2\t50.00\n") != std::string::npos);
  CHECK(text.find("transitivity\t1\t1\t25.00\n") != std::string::npos);
  CHECK(text.find("second_symmetry:common_effect\t-\t1\t25.00\n") != std::string::npos);
  CHECK(text.find("total\t-\t4\t100.00\n") != std::string::npos);
}
