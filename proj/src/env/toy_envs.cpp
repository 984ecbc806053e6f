#include "osb/env/toy_envs.hpp"

#include <cmath>
#include <numbers>

namespace osb::env {

namespace {

EnvSpec point_reacher_spec(const PointReacherOptions& o) {
  EnvSpec spec;
  spec.name = "pointreacher-v0";
  spec.state_dim = 4;
  spec.action_dim = 2;
  spec.action_low = Vec::Constant(2, -1.0);
  spec.action_high = Vec::Constant(2, 1.0);
  spec.max_episode_steps = o.max_episode_steps;
  spec.gamma = o.gamma;
  return spec;
}

EnvSpec pendulum_spec(const PendulumOptions& o) {
  EnvSpec spec;
  spec.name = "pendulum-v0";
  spec.state_dim = 3;
  spec.action_dim = 1;
  spec.action_low = Vec::Constant(1, -o.max_torque);
  spec.action_high = Vec::Constant(1, o.max_torque);
  spec.max_episode_steps = o.max_episode_steps;
  spec.gamma = o.gamma;
  return spec;
}

}  // namespace

PointReacher::PointReacher(PointReacherOptions options)
    : Env(point_reacher_spec(options)), options_(options) {}

Vec PointReacher::sample_initial_state(Rng& rng) {
  std::uniform_real_distribution<double> box(-options_.arena, options_.arena);
  Vec s(4);
  const double px = box(rng), py = box(rng), gx = box(rng), gy = box(rng);
  s << px, py, gx - px, gy - py;
  return s;
}

void PointReacher::set_state(const Vec& position, const Vec& goal) {
  reset(0);
  Vec s(4);
  s << position[0], position[1], goal[0] - position[0], goal[1] - position[1];
  mutable_state() = s;
}

double PointReacher::advance(Vec& state, const Vec& action, Rng&) {
  const double reward = -state.tail<2>().norm() - options_.action_cost * action.squaredNorm();
  state.head<2>() += options_.dt * action;
  state.tail<2>() -= options_.dt * action;
  return reward;
}

Policy PointReacher::expert_policy() const {
  const double gain = options_.expert_gain;
  return [gain](const Vec& s) -> Vec {
    return (gain * s.tail<2>()).cwiseMax(-1.0).cwiseMin(1.0);
  };
}

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  double t = std::fmod(theta + pi, 2.0 * pi);
  if (t < 0) t += 2.0 * pi;
  return t - pi;
}

Pendulum::Pendulum(PendulumOptions options) : Env(pendulum_spec(options)), options_(options) {}

Vec Pendulum::sample_initial_state(Rng& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> speed(-1.0, 1.0);
  theta_ = angle(rng);
  theta_dot_ = speed(rng);
  Vec s(3);
  s << std::cos(theta_), std::sin(theta_), theta_dot_;
  return s;
}

double Pendulum::advance(Vec& state, const Vec& action, Rng&) {
  const double u = action[0];
  const double th = wrap_angle(theta_);
  const double reward = -(th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);
  const double g = options_.gravity;
  double new_dot = theta_dot_ + (3.0 * g / 2.0 * std::sin(theta_) + 3.0 * u) * options_.dt;
  new_dot = std::clamp(new_dot, -options_.max_speed, options_.max_speed);
  theta_ = theta_ + new_dot * options_.dt;
  theta_dot_ = new_dot;
  state << std::cos(theta_), std::sin(theta_), theta_dot_;
  return reward;
}

Policy Pendulum::expert_policy() const {
  const double torque = options_.max_torque;
  const double c = 1.5 * options_.gravity;
  return [torque, c](const Vec& s) -> Vec {
    const double th = std::atan2(s[1], s[0]);
    const double dot = s[2];
    const double energy = 0.5 * dot * dot + c * std::cos(th);
    double u;
    if (std::cos(th) > 0.85) {
      u = -(10.0 * th + 2.0 * dot);
    } else {
      const double deficit = c - energy;
      const double direction = dot == 0.0 ? 1.0 : (dot > 0.0 ? 1.0 : -1.0);
      u = deficit > 0.0 ? torque * direction : -0.5 * torque * direction;
    }
    return Vec::Constant(1, std::clamp(u, -torque, torque));
  };
}

}  // namespace osb::env
