#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osb/sweep/runner.hpp"

namespace osb::report {

enum class Family { score_bars, train_val_curves, score_plus_val_curves, val_compare };

std::string to_string(Family family);
Family parse_family(const std::string& text);
const std::vector<Family>& all_families();

struct ReportSpec {
  Family family = Family::score_bars;
  // Empty filters select everything that is done.
  std::vector<std::string> algorithms;
  std::vector<std::int64_t> dataset_sizes;
  // val_compare: the size to compare at; defaults to the smallest selected size.
  std::optional<std::int64_t> compare_size;
  std::filesystem::path output_dir;
  bool write_svg = true;
};

struct ReportFiles {
  std::filesystem::path table;
  std::optional<std::filesystem::path> image;
  std::size_t table_rows = 0;
};

// One row per plotted point:
//   algorithm,dataset_size,series,update_index,mean,band_low,band_high,n_seeds
// score_bars plots the last evaluated update only. Throws ValidationError
// when the selection resolves to no done runs.
std::string render_table(Family family, const std::vector<sweep::AggregateRow>& rows);
std::vector<sweep::AggregateRow> report_rows(const ReportSpec& spec,
                                             const std::vector<sweep::RunMetrics>& runs);
ReportFiles write_report(const ReportSpec& spec, const std::vector<sweep::RunMetrics>& runs);

// Static vector image for a family's rows.
std::string render_svg(Family family, const std::vector<sweep::AggregateRow>& rows);

}  // namespace osb::report
