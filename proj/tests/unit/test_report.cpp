#include <doctest.h>

#include <fstream>
#include <sstream>

#include "affect/error.hpp"
#include "affect/prompting.hpp"
#include "affect/report.hpp"
#include "support.hpp"

using namespace affect;

namespace {

std::vector<std::string> lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

NamedReport sample(const std::string& name, bool with_precision) {
  EvalReport r = classification_report(
      "zero-shot", {{"a", "anger", "anger", 0}, {"b", "sad", "anger", 0}, {"c", "sad", "sad", 0}, {"d", "happy", "sad", 0}});
  r.metadata["policy"] = name;
  if (with_precision) {
    r.precision_at_k.push_back({"high pitch", 10, 4, 0.4});
    r.precision_at_k.push_back({"low pitch", 10, 6, 0.6});
  }
  return {name, r};
}

}  // namespace

TEST_CASE("accuracy CSV has a row per class plus overall") {
  testing::TempDir dir("report");
  render_reports({sample("class", false)}, dir.path());
  const auto csv = lines(dir.path() / "zero-shot_accuracy.csv");
  REQUIRE(csv.size() == 1 + 3 + 1);
  CHECK(csv[0] == "report,class,support,correct,accuracy");
  CHECK(csv[1].rfind("class,anger,1,1,", 0) == 0);
  CHECK(csv[4].rfind("class,overall,4,2,0.5", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "precision_at_k.csv"));
}

TEST_CASE("one bar per policy") {
  testing::TempDir dir("report6");
  std::vector<NamedReport> reports;
  for (const auto& p : canonical_policies()) reports.push_back(sample(p.name(), true));
  const auto files = render_reports(reports, dir.path());
  CHECK(files.size() == 4);
  std::ifstream in(dir.path() / "zero-shot_accuracy.svg");
  std::stringstream s;
  s << in.rdbuf();
  CHECK(count(s.str(), "<rect class=\"bar\"") == 6);
  for (const auto& p : canonical_policies()) CHECK(s.str().find(">" + p.name() + "<") != std::string::npos);
  const auto pk = lines(dir.path() / "precision_at_k.csv");
  CHECK(pk[0] == "report,query,k,relevant,precision");
  CHECK(pk.size() == 1 + 6 * 2);
  CHECK(std::filesystem::exists(dir.path() / "precision_at_10.svg"));
}

TEST_CASE("empty report list is rejected") {
  testing::TempDir dir("report0");
  try {
    render_reports({}, dir.path());
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
  }
}

TEST_CASE("reports load by policy name or file stem") {
  testing::TempDir dir("report_load");
  const auto s = sample("augment", false);
  save_report(s.report, dir.path() / "x.json");
  const NamedReport a = load_report(dir.path() / "x.json");
  CHECK(a.name == "augment");
  CHECK(a.report == s.report);
  EvalReport plain = s.report;
  plain.metadata = nlohmann::json::object();
  save_report(plain, dir.path() / "run7.json");
  CHECK(load_report(dir.path() / "run7.json").name == "run7");
  std::ofstream(dir.path() / "bad.json") << "{\"schema\": \"nope\"}";
  CHECK_THROWS_AS(load_report(dir.path() / "bad.json"), Error);
  CHECK_THROWS_AS(load_report(dir.path() / "missing.json"), Error);
}
