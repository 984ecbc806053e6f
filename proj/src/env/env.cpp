#include "osb/env/env.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "osb/core/error.hpp"

namespace osb::env {

namespace {
thread_local std::uint64_t thread_env_steps = 0;
}

std::uint64_t env_steps_on_this_thread() { return thread_env_steps; }

void EnvSpec::validate() const {
  std::ostringstream problems;
  if (state_dim < 1) problems << "state_dim must be >= 1; ";
  if (action_dim < 1) problems << "action_dim must be >= 1; ";
  if (action_low.size() != action_dim || action_high.size() != action_dim) {
    problems << "action bounds must have action_dim entries; ";
  } else if (!(action_low.array() < action_high.array()).all()) {
    problems << "action_low must be < action_high elementwise; ";
  }
  if (max_episode_steps < 1) problems << "max_episode_steps must be >= 1; ";
  if (!(gamma > 0.0 && gamma <= 1.0)) problems << "gamma must lie in (0, 1]; ";
  const std::string text = problems.str();
  if (!text.empty()) throw ValidationError("invalid EnvSpec '" + name + "': " + text);
}

Env::Env(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Vec Env::reset(std::uint64_t seed) {
  rng_.seed(derive_seed(seed, "env"));
  state_ = sample_initial_state(rng_);
  elapsed_ = 0;
  is_reset_ = true;
  return state_;
}

Vec Env::clip_action(const Vec& action) const {
  return action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
}

StepResult Env::step(const Vec& action) {
  if (!is_reset_) throw RuntimeFailure("Env::step called before reset on '" + spec_.name + "'");
  if (action.size() != spec_.action_dim) {
    throw ValidationError("action has " + std::to_string(action.size()) + " entries, expected " +
                          std::to_string(spec_.action_dim));
  }
  ++step_count_;
  ++thread_env_steps;
  StepResult result;
  result.reward = advance(state_, clip_action(action), rng_);
  ++elapsed_;
  result.next_state = state_;
  result.done = elapsed_ >= spec_.max_episode_steps;
  if (result.done) is_reset_ = false;
  return result;
}

Policy uniform_random_policy(const EnvSpec& spec, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(derive_seed(seed, "uniform-policy"));
  Vec low = spec.action_low;
  Vec high = spec.action_high;
  return [rng, low, high](const Vec&) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec a(low.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = low[i] + (high[i] - low[i]) * unit(*rng);
    return a;
  };
}

void Trajectory::validate() const {
  const auto n = states.rows();
  if (actions.rows() != n || rewards.size() != n || next_states.rows() != n ||
      static_cast<Eigen::Index>(dones.size()) != n) {
    throw ValidationError("trajectory columns have unequal lengths");
  }
  if (!states.allFinite() || !actions.allFinite() || !rewards.allFinite() ||
      !next_states.allFinite()) {
    throw ValidationError("trajectory contains non-finite values");
  }
}

Trajectory rollout(Env& env, const Policy& policy, int horizon, std::uint64_t seed,
                   double action_noise_std) {
  if (horizon < 1) throw ValidationError("rollout horizon must be >= 1");
  const auto& spec = env.spec();
  Rng noise_rng(derive_seed(seed, "action-noise"));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vec> states, actions, next_states;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  Vec state = env.reset(seed);
  for (int t = 0; t < horizon; ++t) {
    Vec action = policy(state);
    if (action_noise_std > 0.0) {
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] += action_noise_std * normal(noise_rng);
    }
    action = env.clip_action(action);
    StepResult r = env.step(action);
    states.push_back(state);
    actions.push_back(action);
    rewards.push_back(r.reward);
    next_states.push_back(r.next_state);
    // Episodes end only at the time limit, which is a truncation, not a terminal state.
    dones.push_back(0);
    state = std::move(r.next_state);
    if (r.done) break;
  }

  const auto n = static_cast<Eigen::Index>(states.size());
  Trajectory traj;
  traj.states.resize(n, spec.state_dim);
  traj.actions.resize(n, spec.action_dim);
  traj.next_states.resize(n, spec.state_dim);
  traj.rewards.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    traj.states.row(t) = states[t].cast<float>().transpose();
    traj.actions.row(t) = actions[t].cast<float>().transpose();
    traj.next_states.row(t) = next_states[t].cast<float>().transpose();
    traj.rewards[t] = static_cast<float>(rewards[t]);
  }
  traj.dones = std::move(dones);
  return traj;
}

}  // namespace osb::env
