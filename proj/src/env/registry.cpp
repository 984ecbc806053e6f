#include "osb/env/registry.hpp"

#include "osb/core/error.hpp"
#include "osb/env/linquad.hpp"
#include "osb/env/toy_envs.hpp"

namespace osb::env {

namespace {

Mat matrix_from_json(const nlohmann::json& rows, const char* key) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ValidationError(std::string("linquad option '") + key + "' must be a nested array");
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c) {
      throw ValidationError(std::string("linquad option '") + key + "' has ragged rows");
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

void check_keys(const nlohmann::json& options, std::initializer_list<const char*> allowed,
                const std::string& env) {
  for (auto it = options.begin(); it != options.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || it.key() == key;
    if (!ok) throw ValidationError("unknown option '" + it.key() + "' for env " + env);
  }
}

}  // namespace

const std::vector<std::string>& registered_envs() {
  static const std::vector<std::string> names = {"pointreacher-v0", "pendulum-v0", "linquad-v0"};
  return names;
}

std::unique_ptr<Env> make_env(const std::string& name, const nlohmann::json& options) {
  const nlohmann::json opts = options.is_null() ? nlohmann::json::object() : options;
  try {
    if (name == "pointreacher-v0") {
      check_keys(opts, {"dt", "action_cost", "arena", "expert_gain", "max_episode_steps", "gamma"},
                 name);
      PointReacherOptions o;
      o.dt = opts.value("dt", o.dt);
      o.action_cost = opts.value("action_cost", o.action_cost);
      o.arena = opts.value("arena", o.arena);
      o.expert_gain = opts.value("expert_gain", o.expert_gain);
      o.max_episode_steps = opts.value("max_episode_steps", o.max_episode_steps);
      o.gamma = opts.value("gamma", o.gamma);
      return std::make_unique<PointReacher>(o);
    }
    if (name == "pendulum-v0") {
      check_keys(opts, {"dt", "max_torque", "max_speed", "gravity", "max_episode_steps", "gamma"},
                 name);
      PendulumOptions o;
      o.dt = opts.value("dt", o.dt);
      o.max_torque = opts.value("max_torque", o.max_torque);
      o.max_speed = opts.value("max_speed", o.max_speed);
      o.gravity = opts.value("gravity", o.gravity);
      o.max_episode_steps = opts.value("max_episode_steps", o.max_episode_steps);
      o.gamma = opts.value("gamma", o.gamma);
      return std::make_unique<Pendulum>(o);
    }
    if (name == "linquad-v0") {
      check_keys(opts,
                 {"A", "B", "Q", "R", "process_noise_std", "init_scale", "action_bound",
                  "max_episode_steps", "gamma"},
                 name);
      LinQuadOptions o = LinQuadOptions::defaults();
      if (opts.contains("A")) o.dynamics.A_dyn = matrix_from_json(opts["A"], "A");
      if (opts.contains("B")) o.dynamics.B_dyn = matrix_from_json(opts["B"], "B");
      if (opts.contains("Q")) o.dynamics.Q_cost = matrix_from_json(opts["Q"], "Q");
      if (opts.contains("R")) o.dynamics.R_cost = matrix_from_json(opts["R"], "R");
      o.dynamics.process_noise_std = opts.value("process_noise_std", o.dynamics.process_noise_std);
      o.init_scale = opts.value("init_scale", o.init_scale);
      o.action_bound = opts.value("action_bound", o.action_bound);
      o.max_episode_steps = opts.value("max_episode_steps", o.max_episode_steps);
      o.gamma = opts.value("gamma", o.gamma);
      return std::make_unique<LinQuad>(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad options for env " + name + ": " + e.what());
  }
  std::string known;
  for (const auto& n : registered_envs()) known += (known.empty() ? "" : ", ") + n;
  throw ValidationError("unknown env '" + name + "' (registered: " + known + ")");
}

}  // namespace osb::env
