#pragma once

#include <memory>

#include "osb/env/env.hpp"

namespace osb::env {

// 2-D kinematic reacher. State = (position, goal - position); the goal is
// fixed per episode. Action is a velocity command in [-1, 1]^2.
// Reward: -|goal - position| - action_cost * |a|^2.
struct PointReacherOptions {
  double dt = 0.05;
  double action_cost = 0.1;
  double arena = 1.0;          // start and goal drawn uniformly from [-arena, arena]^2
  double expert_gain = 10.0;   // expert: a = clip(gain * (goal - position))
  int max_episode_steps = 200;
  double gamma = 0.99;
};

class PointReacher final : public Env {
 public:
  explicit PointReacher(PointReacherOptions options = {});
  Policy expert_policy() const override;
  // Places the agent and goal explicitly (for tests and scripted starts).
  void set_state(const Vec& position, const Vec& goal);

 protected:
  Vec sample_initial_state(Rng& rng) override;
  double advance(Vec& state, const Vec& action, Rng& rng) override;

 private:
  PointReacherOptions options_;
};

// Torque-limited pendulum swing-up. State = (cos th, sin th, thdot) with
// th = 0 upright. Reward: -(th^2 + 0.1 thdot^2 + 0.001 u^2).
struct PendulumOptions {
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;
  double gravity = 10.0;
  int max_episode_steps = 200;
  double gamma = 0.99;
};

class Pendulum final : public Env {
 public:
  explicit Pendulum(PendulumOptions options = {});
  // Energy pumping far from upright, linear stabilization near it.
  Policy expert_policy() const override;

 protected:
  Vec sample_initial_state(Rng& rng) override;
  double advance(Vec& state, const Vec& action, Rng& rng) override;

 private:
  PendulumOptions options_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

double wrap_angle(double theta);

}  // namespace osb::env
