#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "osb/data/dataset.hpp"
#include "osb/eval/metrics.hpp"
#include "osb/sweep/config.hpp"

namespace osb::sweep {

// Bumped whenever the run directory contents change meaning.
inline constexpr int kLayoutVersion = 1;

enum class RunStatus { pending, running, done, failed };
std::string to_string(RunStatus status);
RunStatus parse_run_status(const std::string& text);

struct RunRecord {
  std::string run_id;
  algo::AlgoId algorithm = algo::AlgoId::bc;
  std::int64_t dataset_size = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  RunStatus status = RunStatus::pending;
  std::filesystem::path run_dir;
  std::string message;

  std::filesystem::path metrics_path() const { return run_dir / "metrics.csv"; }
  std::filesystem::path checkpoint_root() const { return run_dir; }
};

// Cartesian product algorithms x sizes x seeds in that nesting order.
// Throws ValidationError on empty lists or duplicate grid points.
std::vector<RunRecord> plan_sweep(const ExperimentConfig& config);

// Data shared by every run of a sweep: the training pool, the held-out
// validation transitions and the score anchors.
struct SharedData {
  data::TrajectoryDataset train_pool;
  data::TransitionDataset val;
  // Absent when the env is not in the registry (imported data only).
  std::optional<eval::ScoreAnchors> anchors;
  std::filesystem::path dir;
};

// Generates (or imports) the data once and caches it under
// <output_root>/data/<digest>/; later calls load the cache.
SharedData prepare_data(const ExperimentConfig& config);

struct RunOutcome {
  RunStatus status = RunStatus::pending;
  std::string message;
  std::uint64_t training_env_steps = 0;
  std::int64_t updates_performed = 0;
};

// Trains one grid point and writes metrics.csv, timing.csv, summary.json and
// ckpt_<index>/ directories under record.run_dir (wiped first).
RunOutcome run_one(const ExperimentConfig& config, const SharedData& shared, const RunRecord& record);

struct ExecuteSummary {
  int done = 0;
  int failed = 0;
  int skipped = 0;
  std::int64_t updates_performed = 0;
  std::vector<RunRecord> records;
};

// True when the run directory holds a finished run of this layout/config.
bool is_run_done(const RunRecord& record);

// Runs every record not already done, `parallelism` runs at a time. A failing
// run is recorded with its message and never stops the others. The registry
// file <output_root>/registry.json is rewritten after each state change.
ExecuteSummary execute(const ExperimentConfig& config, std::vector<RunRecord> plan, int parallelism,
                       std::ostream* log = nullptr);

std::filesystem::path registry_path(const ExperimentConfig& config);
// run_id -> record, from the registry file (empty when absent).
std::vector<RunRecord> read_registry(const std::filesystem::path& file);

// Done runs and their metrics.
struct RunMetrics {
  RunRecord record;
  std::vector<eval::MetricsRow> rows;
};
std::vector<RunMetrics> load_done_runs(const std::vector<RunRecord>& records);

struct AggregateRow {
  std::string algorithm;
  std::int64_t dataset_size = 0;
  std::int64_t update_index = 0;
  std::string metric;
  double mean = 0.0;
  double band_low = 0.0;
  double band_high = 0.0;
  int n_seeds = 0;
};

// Metric names: train_mse, val_mse, online_return, normalized_score, overfit_gap.
double metric_value(const eval::MetricsRow& row, const std::string& metric);

// Per (algorithm, size, update_index): mean across seeds with a min/max band.
// Throws ValidationError when seeds of one grid point disagree on the update grid.
std::vector<AggregateRow> aggregate(const std::vector<RunMetrics>& runs, const std::string& metric);

}  // namespace osb::sweep
