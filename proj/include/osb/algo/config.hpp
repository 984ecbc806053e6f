#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "osb/nn/mlp.hpp"

namespace osb::algo {

enum class AlgoId { bc, td3bc, bcq, iql, dac };

std::string to_string(AlgoId id);
// Throws ValidationError naming the valid ids.
AlgoId parse_algo_id(const std::string& text);
const std::vector<AlgoId>& offline_algorithms();

// Defaults follow the published reference implementations of each method.
struct Td3bcConfig {
  double alpha = 2.5;
  double policy_noise = 0.2;  // fraction of max_action
  double noise_clip = 0.5;    // fraction of max_action
  int policy_delay = 2;
  bool normalize_states = true;
};

struct BcqConfig {
  int n_candidates = 10;
  double phi = 0.05;
  double lambda_min = 0.75;
  int latent_dim = 0;  // 0 selects 2 * action_dim
  double kl_weight = 0.5;
};

struct IqlConfig {
  double expectile = 0.7;
  double beta = 3.0;
  double weight_clip = 100.0;
};

struct DacConfig {
  double discriminator_lr = 3e-4;
  double gradient_penalty = 10.0;
  std::int64_t replay_capacity = 1000000;
  double exploration_noise = 0.1;  // fraction of max_action
  std::int64_t start_steps = 1000;  // uniform-random actions before the actor takes over
  std::int64_t max_env_steps = 0;   // 0: one environment step per gradient update
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
};

struct AlgoConfig {
  AlgoId algorithm = AlgoId::bc;
  int batch_size = 256;
  double discount = 0.99;
  double tau = 0.005;
  double learning_rate = 3e-4;
  std::vector<int> hidden = {64, 64};
  nn::Activation activation = nn::Activation::relu;
  // Actor overrides; BC with no hidden layers and identity output is a linear regressor.
  std::optional<std::vector<int>> actor_hidden;
  nn::OutputTransform actor_output = nn::OutputTransform::tanh_scaled;
  Td3bcConfig td3bc;
  BcqConfig bcq;
  IqlConfig iql;
  DacConfig dac;

  // Collects every violated constraint into one ValidationError.
  void validate() const;
};

// Keys mirror the struct fields; per-algorithm blocks live under "td3bc",
// "bcq", "iql", "dac". Missing keys keep defaults; unknown keys are rejected.
AlgoConfig algo_config_from_json(AlgoId id, const nlohmann::json& j);
nlohmann::json to_json(const AlgoConfig& config);

// Dimensions and action box of the problem an agent is trained on. Learned
// actors emit bound * tanh(.), so the box must be symmetric and uniform.
struct ProblemSpec {
  int state_dim = 0;
  int action_dim = 0;
  float max_action = 1.0f;
  std::string env_name;
  nlohmann::json env_options = nlohmann::json::object();

  static ProblemSpec from_bounds(int state_dim, const Eigen::VectorXd& low,
                                 const Eigen::VectorXd& high, std::string env_name = {},
                                 nlohmann::json env_options = nlohmann::json::object());
};

}  // namespace osb::algo
