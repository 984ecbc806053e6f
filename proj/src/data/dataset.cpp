#include "osb/data/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "osb/core/error.hpp"

namespace osb::data {

std::string to_string(DataSource source) {
  return source == DataSource::generated ? "generated" : "imported";
}

DataSource parse_data_source(const std::string& text) {
  if (text == "generated") return DataSource::generated;
  if (text == "imported") return DataSource::imported;
  throw ValidationError("unknown data source '" + text + "'");
}

Index TrajectoryDataset::total_transitions() const {
  Index total = 0;
  for (const auto& t : trajectories) total += t.length();
  return total;
}

void TrajectoryDataset::validate() const {
  if (state_dim < 1 || action_dim < 1) throw ValidationError("dataset dims must be positive");
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    if (t.length() == 0) throw ValidationError("trajectory " + std::to_string(i) + " is empty");
    if (t.states.cols() != state_dim || t.next_states.cols() != state_dim ||
        t.actions.cols() != action_dim) {
      throw ValidationError("trajectory " + std::to_string(i) + " has inconsistent dims");
    }
    t.validate();
  }
}

TransitionDataset TransitionDataset::rows(const std::vector<Index>& indices) const {
  TransitionDataset out;
  const auto n = static_cast<Index>(indices.size());
  out.states.resize(n, states.cols());
  out.actions.resize(n, actions.cols());
  out.next_states.resize(n, next_states.cols());
  out.rewards.resize(n);
  out.dones.resize(indices.size());
  for (Index i = 0; i < n; ++i) {
    const Index src = indices[static_cast<std::size_t>(i)];
    out.states.row(i) = states.row(src);
    out.actions.row(i) = actions.row(src);
    out.next_states.row(i) = next_states.row(src);
    out.rewards[i] = rewards[src];
    out.dones[static_cast<std::size_t>(i)] = dones[static_cast<std::size_t>(src)];
  }
  return out;
}

void TransitionDataset::validate() const {
  const Index n = states.rows();
  if (actions.rows() != n || rewards.size() != n || next_states.rows() != n ||
      static_cast<Index>(dones.size()) != n) {
    throw ValidationError("transition columns have unequal lengths");
  }
  if (next_states.cols() != states.cols()) throw ValidationError("state/next_state dims differ");
}

namespace {

// Appends the first `count` rows of `t` to `out` starting at row `at`.
void copy_rows(const Trajectory& t, Index count, TransitionDataset& out, Index at) {
  out.states.middleRows(at, count) = t.states.topRows(count);
  out.actions.middleRows(at, count) = t.actions.topRows(count);
  out.next_states.middleRows(at, count) = t.next_states.topRows(count);
  out.rewards.segment(at, count) = t.rewards.head(count);
  std::copy_n(t.dones.begin(), count, out.dones.begin() + at);
}

TransitionDataset allocate(Index n, int state_dim, int action_dim) {
  TransitionDataset out;
  out.states.resize(n, state_dim);
  out.actions.resize(n, action_dim);
  out.next_states.resize(n, state_dim);
  out.rewards.resize(n);
  out.dones.assign(static_cast<std::size_t>(n), 0);
  return out;
}

TransitionDataset take_trajectories(const TrajectoryDataset& data,
                                    const std::vector<std::size_t>& order, Index target) {
  TransitionDataset out = allocate(target, data.state_dim, data.action_dim);
  Index filled = 0;
  for (std::size_t idx : order) {
    if (filled == target) break;
    const auto& t = data.trajectories[idx];
    const Index count = std::min(t.length(), target - filled);
    copy_rows(t, count, out, filled);
    filled += count;
  }
  return out;
}

}  // namespace

TransitionDataset flatten(const TrajectoryDataset& data) {
  std::vector<std::size_t> order(data.trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  return take_trajectories(data, order, data.total_transitions());
}

TrajectoryDataset collect_expert_dataset(env::Env& env, const env::Policy& expert_policy,
                                         Index n_transitions, double action_noise_std,
                                         std::uint64_t seed) {
  if (n_transitions < 1) throw ValidationError("n_transitions must be >= 1");
  TrajectoryDataset out;
  out.source = DataSource::generated;
  out.env_name = env.spec().name;
  out.state_dim = env.spec().state_dim;
  out.action_dim = env.spec().action_dim;
  Index total = 0;
  for (std::uint64_t episode = 0; total < n_transitions; ++episode) {
    Trajectory t = env::rollout(env, expert_policy, env.spec().max_episode_steps,
                                derive_seed(seed, episode), action_noise_std);
    const Index keep = std::min(t.length(), n_transitions - total);
    if (keep < t.length()) {
      t.states.conservativeResize(keep, Eigen::NoChange);
      t.actions.conservativeResize(keep, Eigen::NoChange);
      t.next_states.conservativeResize(keep, Eigen::NoChange);
      t.rewards.conservativeResize(keep);
      t.dones.resize(static_cast<std::size_t>(keep));
    }
    total += keep;
    out.trajectories.push_back(std::move(t));
  }
  return out;
}

std::string to_string(SubsampleMode mode) {
  switch (mode) {
    case SubsampleMode::trajectory_prefix: return "trajectory_prefix";
    case SubsampleMode::uniform_transitions: return "uniform_transitions";
    case SubsampleMode::trajectory_uniform: return "trajectory_uniform";
  }
  return "?";
}

SubsampleMode parse_subsample_mode(const std::string& text) {
  if (text == "trajectory_prefix") return SubsampleMode::trajectory_prefix;
  if (text == "uniform_transitions") return SubsampleMode::uniform_transitions;
  if (text == "trajectory_uniform") return SubsampleMode::trajectory_uniform;
  throw ValidationError("unknown subsample mode '" + text +
                        "' (valid: trajectory_prefix, uniform_transitions, trajectory_uniform)");
}

TransitionDataset subsample(const TrajectoryDataset& data, Index target_size, SubsampleMode mode,
                            std::uint64_t seed) {
  const Index total = data.total_transitions();
  if (target_size < 1 || target_size > total) {
    throw ValidationError("subsample target " + std::to_string(target_size) +
                          " outside [1, " + std::to_string(total) + "]");
  }
  Rng rng(derive_seed(seed, "subsample"));
  std::vector<std::size_t> order(data.trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  switch (mode) {
    case SubsampleMode::trajectory_prefix:
      return take_trajectories(data, order, target_size);
    case SubsampleMode::trajectory_uniform:
      std::shuffle(order.begin(), order.end(), rng);
      return take_trajectories(data, order, target_size);
    case SubsampleMode::uniform_transitions: {
      std::vector<Index> picks(static_cast<std::size_t>(total));
      std::iota(picks.begin(), picks.end(), Index{0});
      // Partial Fisher-Yates: the first target_size slots are a uniform sample.
      for (Index i = 0; i < target_size; ++i) {
        std::uniform_int_distribution<Index> pick(i, total - 1);
        std::swap(picks[static_cast<std::size_t>(i)], picks[static_cast<std::size_t>(pick(rng))]);
      }
      picks.resize(static_cast<std::size_t>(target_size));
      std::sort(picks.begin(), picks.end());
      return flatten(data).rows(picks);
    }
  }
  throw ValidationError("unhandled subsample mode");
}

ValidationSplit hold_out_validation(const TrajectoryDataset& data, Index n_val_trajectories,
                                    std::uint64_t seed) {
  const auto count = static_cast<Index>(data.trajectories.size());
  if (n_val_trajectories < 1) throw ValidationError("n_val_trajectories must be >= 1");
  if (n_val_trajectories >= count) {
    throw ValidationError("n_val_trajectories (" + std::to_string(n_val_trajectories) +
                          ") must be smaller than the number of trajectories (" +
                          std::to_string(count) + ")");
  }
  std::vector<std::size_t> order(data.trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "validation-split"));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + n_val_trajectories);
  std::sort(val_idx.begin(), val_idx.end());

  ValidationSplit split;
  split.val_trajectory_indices = val_idx;
  TrajectoryDataset val_traj;
  val_traj.source = data.source;
  val_traj.env_name = data.env_name;
  val_traj.state_dim = data.state_dim;
  val_traj.action_dim = data.action_dim;
  split.train = val_traj;
  std::size_t next_val = 0;
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    if (next_val < val_idx.size() && val_idx[next_val] == i) {
      val_traj.trajectories.push_back(data.trajectories[i]);
      ++next_val;
    } else {
      split.train.trajectories.push_back(data.trajectories[i]);
    }
  }
  split.val = flatten(val_traj);
  return split;
}

NormalizationStats NormalizationStats::identity(int state_dim) {
  return {Eigen::VectorXf::Zero(state_dim), Eigen::VectorXf::Ones(state_dim)};
}

RowMatrixF NormalizationStats::apply(const RowMatrixF& states) const {
  RowMatrixF out = states;
  out.rowwise() -= state_mean.transpose();
  out.array().rowwise() /= state_std.transpose().array();
  return out;
}

Eigen::VectorXf NormalizationStats::apply(const Eigen::VectorXf& state) const {
  return ((state - state_mean).array() / state_std.array()).matrix();
}

NormalizationStats compute_normalization(const TransitionDataset& data) {
  if (data.size() < 2) throw ValidationError("normalization needs at least 2 transitions");
  const Eigen::MatrixXd s = data.states.cast<double>();
  const Eigen::VectorXd mean = s.colwise().mean().transpose();
  const Eigen::VectorXd var =
      (s.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
  NormalizationStats stats;
  stats.state_mean = mean.cast<float>();
  stats.state_std = var.array().sqrt().cast<float>().max(kStdFloor).matrix();
  return stats;
}

}  // namespace osb::data
