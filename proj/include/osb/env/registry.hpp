#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "osb/env/env.hpp"

namespace osb::env {

// "pointreacher-v0", "pendulum-v0", "linquad-v0".
const std::vector<std::string>& registered_envs();

// Builds an environment by name. `options` overrides per-env defaults; for
// linquad-v0 the keys are A, B, Q, R (row-major nested arrays),
// process_noise_std, init_scale, action_bound, max_episode_steps, gamma.
// Unknown names raise ValidationError listing the registry.
std::unique_ptr<Env> make_env(const std::string& name,
                              const nlohmann::json& options = nlohmann::json::object());

}  // namespace osb::env
