#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coverbench/metrics.hpp"
#include "support/oracles.hpp"

using namespace coverbench;
namespace fs = std::filesystem;

namespace {

RunRecord rec(std::array<double, 4> probs, int chosen, int answer) {
  RunRecord r;
  r.question_id = "q";
  r.model_id = "m";
  r.strategy = "direct";
  r.probs = probs;
  r.chosen = chosen;
  r.answer_index = answer;
  r.correct = chosen == answer;
  return r;
}

}  // namespace

TEST_CASE("bin_index pins the right-closed convention") {
  CHECK(metrics::bin_index(0.05, 10) == 0);
  CHECK(metrics::bin_index(0.1, 10) == 0);    // boundary belongs left
  CHECK(metrics::bin_index(0.11, 10) == 1);
  CHECK(metrics::bin_index(0.95, 10) == 9);
  CHECK(metrics::bin_index(1.0, 10) == 9);
  CHECK(metrics::bin_index(0.0, 10) == 0);
  CHECK(metrics::bin_index(-0.5, 10) == 0);
  CHECK(metrics::bin_index(1.5, 10) == 9);  // clamped
  CHECK(metrics::bin_index(0.4, 1) == 0);
  CHECK(metrics::bin_index(2.0 / 3.0, 3) == 1);
}

TEST_CASE("empty record sets are rejected") {
  std::vector<RunRecord> empty;
  CHECK_THROWS_AS(metrics::accuracy(empty), std::invalid_argument);
  CHECK_THROWS_AS(metrics::ece(empty), std::invalid_argument);
  CHECK_THROWS_AS(metrics::nll(empty), std::invalid_argument);
  CHECK_THROWS_AS(metrics::rms_ce(empty), std::invalid_argument);
  CHECK_THROWS_AS(metrics::report(empty), std::invalid_argument);
}

TEST_CASE("uniform records: nll is exactly ln 4") {
  std::vector<RunRecord> one = {rec({0.25, 0.25, 0.25, 0.25}, 0, 2)};
  CHECK(metrics::nll(one) == std::log(4.0));
  std::vector<RunRecord> two = {rec({0.25, 0.25, 0.25, 0.25}, 0, 2),
                                rec({0.25, 0.25, 0.25, 0.25}, 0, 0)};
  CHECK(metrics::nll(two) == std::log(4.0));
  CHECK(metrics::nll(two) == doctest::Approx(1.3863).epsilon(1e-4));
}

TEST_CASE("single-bin ece equals |acc - 0.25| on uniform records") {
  // 4 uniform records, 1 correct: acc = 0.25 exactly, conf mean = 0.25.
  std::vector<RunRecord> rs = {rec({0.25, 0.25, 0.25, 0.25}, 0, 0),
                               rec({0.25, 0.25, 0.25, 0.25}, 0, 1),
                               rec({0.25, 0.25, 0.25, 0.25}, 0, 2),
                               rec({0.25, 0.25, 0.25, 0.25}, 0, 3)};
  CHECK(metrics::ece(rs, 1) == 0.0);
  rs[1].correct = true;  // acc 0.5
  CHECK(metrics::ece(rs, 1) == 0.25);
  rs[2].correct = true;
  rs[3].correct = true;  // acc 1.0
  CHECK(metrics::ece(rs, 1) == 0.75);
}

TEST_CASE("frozen 8-record 3-bin ece fixture") {
  std::vector<RunRecord> rs;
  // Bin (0,1/3]: two records at 0.25, one correct -> |1/2 - 1/4| = 1/4.
  rs.push_back(rec({0.25, 0.25, 0.25, 0.25}, 0, 0));
  rs.push_back(rec({0.25, 0.25, 0.25, 0.25}, 0, 1));
  // Bin (1/3,2/3]: three at 0.5, two correct -> |2/3 - 1/2| = 1/6.
  rs.push_back(rec({0.5, 0.3, 0.1, 0.1}, 0, 0));
  rs.push_back(rec({0.5, 0.3, 0.1, 0.1}, 0, 0));
  rs.push_back(rec({0.5, 0.3, 0.1, 0.1}, 0, 3));
  // Bin (2/3,1]: three at 0.9, all correct -> |1 - 0.9| = 0.1.
  rs.push_back(rec({0.9, 0.05, 0.03, 0.02}, 0, 0));
  rs.push_back(rec({0.9, 0.05, 0.03, 0.02}, 0, 0));
  rs.push_back(rec({0.9, 0.05, 0.03, 0.02}, 0, 0));
  // 2/8 * 1/4 + 3/8 * 1/6 + 3/8 * 1/10 = 0.1625
  CHECK(metrics::ece(rs, 3) == doctest::Approx(0.1625).epsilon(1e-12));
  double rms_expected = std::sqrt(2.0 / 8 * (0.25 * 0.25) +
                                  3.0 / 8 * (1.0 / 36) + 3.0 / 8 * 0.01);
  CHECK(metrics::rms_ce(rs, 3) == doctest::Approx(rms_expected).epsilon(1e-12));
  CHECK(metrics::accuracy(rs) == doctest::Approx(6.0 / 8).epsilon(1e-15));
}

TEST_CASE("frozen 5-record nll fixture with probability floor") {
  std::vector<RunRecord> rs = {
      rec({1.0, 0.0, 0.0, 0.0}, 0, 0),    rec({0.5, 0.5, 0.0, 0.0}, 0, 0),
      rec({0.25, 0.75, 0.0, 0.0}, 1, 0),  rec({0.125, 0.875, 0.0, 0.0}, 1, 0),
      rec({1e-9, 0.999999999, 0.0, 0.0}, 1, 0)};  // floored to 1e-6
  double expected = (0.0 + std::log(2.0) + std::log(4.0) + std::log(8.0) +
                     std::log(1e6)) /
                    5.0;
  CHECK(metrics::nll(rs) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("metrics agree with brute-force oracles on random fixtures") {
  for (int t = 0; t < 60; ++t) {
    auto rs = oracles::random_records(1000 + t, 1 + t % 50);
    CHECK(metrics::accuracy(rs) ==
          doctest::Approx(oracles::accuracy(rs)).epsilon(1e-12));
    CHECK(metrics::ece(rs, 10) ==
          doctest::Approx(oracles::ece(rs, 10)).epsilon(1e-12));
    CHECK(metrics::rms_ce(rs, 10) ==
          doctest::Approx(oracles::rms_ce(rs, 10)).epsilon(1e-12));
    CHECK(metrics::nll(rs) ==
          doctest::Approx(oracles::nll(rs)).epsilon(1e-12));
  }
}

TEST_CASE("rms dominates ece") {
  for (int t = 0; t < 40; ++t) {
    auto rs = oracles::random_records(7000 + t, 2 + t);
    CHECK(metrics::rms_ce(rs, 10) + 1e-12 >= metrics::ece(rs, 10));
  }
}

TEST_CASE("report aggregates bins consistently") {
  auto rs = oracles::random_records(31, 40);
  auto rep = metrics::report(rs, 10);
  CHECK(rep.n == 40);
  CHECK(rep.bin_count == 10);
  CHECK(rep.bins.size() == 10);
  int total = 0;
  for (const auto& b : rep.bins) total += b.count;
  CHECK(total == 40);
  for (const auto& b : rep.bins) {
    if (b.count == 0) {
      CHECK(b.mean_confidence == 0.0);
      CHECK(b.empirical_accuracy == 0.0);
    } else {
      CHECK(b.mean_confidence > b.lo);
      CHECK(b.mean_confidence <= b.hi + 1e-12);
    }
  }
  CHECK(rep.accuracy == metrics::accuracy(rs));
  CHECK(rep.ece == metrics::ece(rs, 10));
  CHECK(rep.nll == metrics::nll(rs));
  CHECK(rep.rms == metrics::rms_ce(rs, 10));
}

TEST_CASE("report json and csv shapes") {
  auto rs = oracles::random_records(5, 12);
  auto rep = metrics::report(rs, 10);
  auto j = nlohmann::json::parse(metrics::report_to_json(rep));
  CHECK(j.at("n") == 12);
  CHECK(j.at("bins").size() == 10);
  CHECK(j.contains("accuracy"));
  CHECK(j.contains("ece"));
  CHECK(j.contains("nll"));
  CHECK(j.contains("rms"));

  fs::path dir = fs::temp_directory_path() / "cb_metrics_probe";
  fs::create_directories(dir);
  metrics::save_reliability_csv((dir / "rel.csv").string(), rep);
  std::ifstream rel(dir / "rel.csv");
  std::string header;
  std::getline(rel, header);
  CHECK(header == "bin_midpoint,mean_confidence,empirical_accuracy,count");
  int lines = 0;
  for (std::string line; std::getline(rel, line);) ++lines;
  CHECK(lines == 10);

  std::vector<metrics::ReportRow> rows(2);
  rows[0] = {"model-a", "image2text-info", "direct", 12, 0.5, 0.1, 1.2, 0.15};
  rows[1] = {"model-b", "text2image-option", "cot", 12, 0.25, 0.2, 1.4, 0.3};
  metrics::save_report_csv((dir / "report.csv").string(), rows);
  std::ifstream csv(dir / "report.csv");
  std::getline(csv, header);
  CHECK(header == "model,track,strategy,n,accuracy,ece,nll,rms");
  std::string row;
  std::getline(csv, row);
  CHECK(row == "model-a,image2text-info,direct,12,0.500000,0.100000,1.200000,0.150000");
  fs::remove_all(dir);
}
