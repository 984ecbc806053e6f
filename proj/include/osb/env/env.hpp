#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "osb/core/seed.hpp"

namespace osb::env {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Vec action_low;
  Vec action_high;
  int max_episode_steps = 200;
  double gamma = 0.99;

  // Throws ValidationError listing every violated invariant.
  void validate() const;
};

struct StepResult {
  Vec next_state;
  double reward = 0.0;
  bool done = false;
};

// Deterministic map from state to action. Stateful policies (e.g. uniform
// random) carry their own generator.
using Policy = std::function<Vec(const Vec& state)>;

// Number of Env::step calls issued from the calling thread since it started.
// Used to prove that offline training never touches an environment.
std::uint64_t env_steps_on_this_thread();

// Episodic MDP with time-limit-only termination. Single-threaded; distinct
// instances share no state.
class Env {
 public:
  explicit Env(EnvSpec spec);
  virtual ~Env() = default;
  Env(const Env&) = delete;
  Env& operator=(const Env&) = delete;

  const EnvSpec& spec() const { return spec_; }

  // Draws an initial state; the same seed gives the same state and the same
  // process-noise stream.
  Vec reset(std::uint64_t seed);

  // Clips `action` into the box, advances, and reports done at the time limit.
  StepResult step(const Vec& action);

  Vec clip_action(const Vec& action) const;

  // Hand-designed or closed-form controller used to generate expert data.
  virtual Policy expert_policy() const = 0;

  const Vec& state() const { return state_; }
  int elapsed_steps() const { return elapsed_; }
  std::uint64_t step_count() const { return step_count_; }

 protected:
  virtual Vec sample_initial_state(Rng& rng) = 0;
  // Reward R(s, a) is evaluated before the transition; `state` is updated in place.
  virtual double advance(Vec& state, const Vec& action, Rng& rng) = 0;

  Vec& mutable_state() { return state_; }

 private:
  EnvSpec spec_;
  Vec state_;
  Rng rng_;
  bool is_reset_ = false;
  int elapsed_ = 0;
  std::uint64_t step_count_ = 0;
};

// Uniform-random actions inside the action box.
Policy uniform_random_policy(const EnvSpec& spec, std::uint64_t seed);

// Rows are time steps. Stored in single precision, matching the on-disk format.
struct Trajectory {
  RowMatrixF states;
  RowMatrixF actions;
  Eigen::VectorXf rewards;
  RowMatrixF next_states;
  std::vector<std::uint8_t> dones;  // 1 = terminal state, no bootstrapping past it

  Eigen::Index length() const { return states.rows(); }
  // Throws ValidationError if columns disagree in length or hold non-finite values.
  void validate() const;
};

// Runs one episode of at most `horizon` steps. Gaussian action noise with
// std `action_noise_std` is added before clipping; recorded actions are the
// clipped ones actually executed.
Trajectory rollout(Env& env, const Policy& policy, int horizon, std::uint64_t seed,
                   double action_noise_std);

}  // namespace osb::env
