#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osb/algo/checkpoint.hpp"
#include "osb/data/dataset.hpp"
#include "osb/env/env.hpp"

namespace osb::eval {

// sum_t gamma^t r_t. Requires 0 <= gamma <= 1.
double discounted_return(const env::Trajectory& traj, double gamma);

// Mean undiscounted return of `policy` over n_episodes full-horizon rollouts;
// episode i is seeded with derive_seed(seed, i).
double evaluate_policy(env::Env& env, const env::Policy& policy, int n_episodes, std::uint64_t seed);
double online_evaluate(const algo::PolicyCheckpoint& ckpt, env::Env& env, int n_episodes,
                       std::uint64_t seed);
env::Policy checkpoint_policy(const algo::PolicyCheckpoint& ckpt);

struct ScoreAnchors {
  double random_score = 0.0;
  double expert_score = 100.0;
  int episodes = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// 100 * (raw - random) / (expert - random). Throws on equal anchors.
double normalized_score(double raw, const ScoreAnchors& anchors);

// Random anchor: uniform actions in the box; expert anchor: env.expert_policy().
ScoreAnchors measure_anchors(env::Env& env, int n_episodes, std::uint64_t seed);
void save_anchors(const ScoreAnchors& anchors, const std::filesystem::path& file);
ScoreAnchors load_anchors(const std::filesystem::path& file);

// Mean over rows and action dims of (pi(s) - a)^2, accumulated in double over
// fixed-order mini-batches. Throws on an empty slice or a dims mismatch.
double action_mse(const algo::PolicyCheckpoint& ckpt, const data::TransitionDataset& slice,
                  int batch_size = 1024);

inline double overfit_gap(double train_mse, double val_mse) { return val_mse - train_mse; }

// Spearman correlation with average ranks for ties. Needs equal lengths >= 3
// and non-constant ranks in both sequences.
double rank_correlation(const std::vector<double>& xs, const std::vector<double>& ys);

struct MetricsRow {
  std::string run_id;
  std::string algorithm;
  std::int64_t dataset_size = 0;
  std::uint64_t seed = 0;
  std::int64_t update_index = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
  std::optional<double> online_return;
  std::optional<double> normalized_score;
};

// update_index of the minimum val_mse; ties go to the earliest index.
std::int64_t early_stop_select(const std::vector<MetricsRow>& rows);

// Comma-separated with a header; optional fields are left empty. Values use
// shortest round-trip formatting so files are byte-stable.
std::string metrics_header();
std::string to_csv_line(const MetricsRow& row);
MetricsRow parse_csv_line(const std::string& line);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& file);

}  // namespace osb::eval
