#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "osb/env/env.hpp"

namespace osb::data {

using env::RowMatrixF;
using env::Trajectory;
using Index = Eigen::Index;

enum class DataSource { generated, imported };

std::string to_string(DataSource source);
DataSource parse_data_source(const std::string& text);

// Trajectory-grouped offline data. Immutable once built; safe to share.
struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  DataSource source = DataSource::generated;
  std::string env_name;
  int state_dim = 0;
  int action_dim = 0;

  Index total_transitions() const;
  // Non-empty trajectories with consistent dims and finite values.
  void validate() const;
};

// Columnar (s, a, r, s', done) arrays, one row per transition.
struct TransitionDataset {
  RowMatrixF states;
  RowMatrixF actions;
  Eigen::VectorXf rewards;
  RowMatrixF next_states;
  std::vector<std::uint8_t> dones;

  Index size() const { return states.rows(); }
  int state_dim() const { return static_cast<int>(states.cols()); }
  int action_dim() const { return static_cast<int>(actions.cols()); }

  TransitionDataset rows(const std::vector<Index>& indices) const;
  void validate() const;
};

TransitionDataset flatten(const TrajectoryDataset& data);

// Rolls out `expert_policy` with per-episode seeds derived from `seed` until
// n_transitions are gathered; the final episode is cut mid-trajectory when
// needed so the total is exact.
TrajectoryDataset collect_expert_dataset(env::Env& env, const env::Policy& expert_policy,
                                         Index n_transitions, double action_noise_std,
                                         std::uint64_t seed);

enum class SubsampleMode { trajectory_prefix, uniform_transitions, trajectory_uniform };

std::string to_string(SubsampleMode mode);
SubsampleMode parse_subsample_mode(const std::string& text);

// Exactly `target_size` transitions.
//  trajectory_prefix:   whole trajectories in stored order, last one truncated
//  trajectory_uniform:  whole trajectories in seeded random order, last one truncated
//  uniform_transitions: seeded sample without replacement, kept in stored order
TransitionDataset subsample(const TrajectoryDataset& data, Index target_size, SubsampleMode mode,
                            std::uint64_t seed);

struct ValidationSplit {
  TrajectoryDataset train;
  TransitionDataset val;
  std::vector<std::size_t> val_trajectory_indices;  // positions in the source dataset, ascending
};

// Holds out `n_val_trajectories` whole trajectories chosen without
// replacement by `seed`. Train keeps the remaining trajectories in order.
ValidationSplit hold_out_validation(const TrajectoryDataset& data, Index n_val_trajectories,
                                    std::uint64_t seed);

struct NormalizationStats {
  Eigen::VectorXf state_mean;
  Eigen::VectorXf state_std;

  static NormalizationStats identity(int state_dim);
  RowMatrixF apply(const RowMatrixF& states) const;
  Eigen::VectorXf apply(const Eigen::VectorXf& state) const;
};

inline constexpr float kStdFloor = 1e-3f;

// Population mean/std per state dimension, std floored at kStdFloor.
NormalizationStats compute_normalization(const TransitionDataset& data);

}  // namespace osb::data
