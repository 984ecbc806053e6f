#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "osb/core/error.hpp"
#include "osb/report/report.hpp"

using namespace osb;
using namespace osb::report;
namespace fs = std::filesystem;

namespace {

sweep::RunMetrics synthetic_run(const std::string& algo, std::int64_t size, std::uint64_t seed) {
  sweep::RunMetrics m;
  m.record.algorithm = algo::parse_algo_id(algo);
  m.record.dataset_size = size;
  m.record.seed = seed;
  m.record.status = sweep::RunStatus::done;
  for (std::int64_t idx : {0, 100, 200}) {
    eval::MetricsRow r;
    r.algorithm = algo;
    r.dataset_size = size;
    r.seed = seed;
    r.update_index = idx;
    r.train_mse = 1.0 / (1.0 + idx + seed);
    r.val_mse = 2.0 / (1.0 + idx) + 0.01 * static_cast<double>(seed) + 1e-6 * static_cast<double>(size);
    r.online_return = -static_cast<double>(idx) - static_cast<double>(seed);
    r.normalized_score = static_cast<double>(idx) / 4.0 + static_cast<double>(seed) + std::log10(size);
    m.rows.push_back(r);
  }
  return m;
}

std::vector<sweep::RunMetrics> grid(const std::vector<std::string>& algos, const std::vector<std::int64_t>& sizes) {
  std::vector<sweep::RunMetrics> out;
  for (const auto& a : algos)
    for (auto s : sizes)
      for (std::uint64_t seed : {0, 1, 2}) out.push_back(synthetic_run(a, s, seed));
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const char* kHeader = "algorithm,dataset_size,series,update_index,mean,band_low,band_high,n_seeds";

}  // namespace

TEST_CASE("score bars give one row per algorithm and size") {
  auto runs = grid({"bc", "iql"}, {100000, 10000, 500});
  ReportSpec spec;
  spec.family = Family::score_bars;
  auto rows = report_rows(spec, runs);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) {
    CHECK(r.update_index == 200);
    CHECK(r.metric == "normalized_score");
    CHECK(r.n_seeds == 3);
    CHECK(r.mean == doctest::Approx(50.0 + 1.0 + std::log10(r.dataset_size)));
    CHECK(r.band_low == doctest::Approx(50.0 + std::log10(r.dataset_size)));
    CHECK(r.band_high == doctest::Approx(52.0 + std::log10(r.dataset_size)));
  }
  auto table = lines(render_table(spec.family, rows));
  CHECK(table.size() == 7);
  CHECK(table[0] == kHeader);
}

TEST_CASE("train_val_curves carries train and validation series per grid point") {
  auto runs = grid({"bc", "td3bc"}, {10000, 500});
  ReportSpec spec;
  spec.family = Family::train_val_curves;
  auto rows = report_rows(spec, runs);
  std::set<std::tuple<std::string, std::int64_t, std::string>> series;
  for (const auto& r : rows) series.insert({r.algorithm, r.dataset_size, r.metric});
  CHECK(series.size() == 2 * 2 * 2);
  CHECK(rows.size() == 2 * 2 * 2 * 3);
  for (const auto& line : lines(render_table(spec.family, rows))) {
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
  }
}

TEST_CASE("score_plus_val_curves pairs score with validation loss") {
  auto runs = grid({"bcq"}, {500});
  ReportSpec spec;
  spec.family = Family::score_plus_val_curves;
  std::set<std::string> metrics;
  for (const auto& r : report_rows(spec, runs)) metrics.insert(r.metric);
  CHECK(metrics == std::set<std::string>{"normalized_score", "val_mse"});
}

TEST_CASE("val_compare gives one series per algorithm at a fixed size") {
  auto runs = grid({"bc", "td3bc", "bcq", "iql", "dac"}, {10000, 500});
  ReportSpec spec;
  spec.family = Family::val_compare;
  auto rows = report_rows(spec, runs);
  std::set<std::string> algos;
  for (const auto& r : rows) {
    CHECK(r.dataset_size == 500);
    CHECK(r.metric == "val_mse");
    algos.insert(r.algorithm);
  }
  CHECK(algos.size() == 5);
  spec.compare_size = 10000;
  for (const auto& r : report_rows(spec, runs)) CHECK(r.dataset_size == 10000);
  spec.compare_size = 77;
  CHECK_THROWS_AS(report_rows(spec, runs), ValidationError);
}

TEST_CASE("empty selection is an error") {
  auto runs = grid({"bc"}, {500});
  ReportSpec spec;
  spec.algorithms = {"iql"};
  CHECK_THROWS_AS(report_rows(spec, runs), ValidationError);
  spec.algorithms.clear();
  spec.dataset_sizes = {10};
  CHECK_THROWS_AS(report_rows(spec, runs), ValidationError);
  CHECK_THROWS_AS(report_rows(ReportSpec{}, {}), ValidationError);
  CHECK_THROWS_AS(parse_family("histogram"), ValidationError);
}

TEST_CASE("reports regenerate byte-identically") {
  auto runs = grid({"bc", "iql"}, {10000, 500});
  const auto dir = fs::temp_directory_path() / ("osb_report_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  for (Family f : all_families()) {
    ReportSpec spec;
    spec.family = f;
    spec.output_dir = dir / "a";
    auto a = write_report(spec, runs);
    spec.output_dir = dir / "b";
    auto b = write_report(spec, runs);
    REQUIRE(a.image.has_value());
    CHECK(slurp(a.table) == slurp(b.table));
    CHECK(slurp(*a.image) == slurp(*b.image));
    CHECK(slurp(*a.image).rfind("<svg", 0) == 0);
    CHECK(a.table.filename() == to_string(f) + ".csv");
    CHECK(lines(slurp(a.table)).size() == a.table_rows + 1);
  }
  ReportSpec no_svg;
  no_svg.output_dir = dir / "c";
  no_svg.write_svg = false;
  CHECK_FALSE(write_report(no_svg, runs).image.has_value());
  fs::remove_all(dir);
}

TEST_CASE("train curves are orange and validation curves blue") {
  auto runs = grid({"bc"}, {500});
  ReportSpec spec;
  spec.family = Family::train_val_curves;
  const auto svg = render_svg(spec.family, report_rows(spec, runs));
  CHECK(svg.find("#ff7f0e") != std::string::npos);
  CHECK(svg.find("#1f77b4") != std::string::npos);
}
