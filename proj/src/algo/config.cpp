#include "osb/algo/config.hpp"

#include <cmath>
#include <set>

#include "osb/core/error.hpp"

namespace osb::algo {

std::string to_string(AlgoId id) {
  switch (id) {
    case AlgoId::bc: return "bc";
    case AlgoId::td3bc: return "td3bc";
    case AlgoId::bcq: return "bcq";
    case AlgoId::iql: return "iql";
    case AlgoId::dac: return "dac";
  }
  return "?";
}

AlgoId parse_algo_id(const std::string& text) {
  for (AlgoId id : {AlgoId::bc, AlgoId::td3bc, AlgoId::bcq, AlgoId::iql, AlgoId::dac}) {
    if (to_string(id) == text) return id;
  }
  throw ValidationError("unknown algorithm '" + text + "' (valid: bc, td3bc, bcq, iql, dac)");
}

const std::vector<AlgoId>& offline_algorithms() {
  static const std::vector<AlgoId> ids = {AlgoId::bc, AlgoId::td3bc, AlgoId::bcq, AlgoId::iql};
  return ids;
}

void AlgoConfig::validate() const {
  std::string p;
  if (batch_size < 1) p += "batch_size must be >= 1; ";
  if (!(discount > 0.0 && discount <= 1.0)) p += "discount must lie in (0, 1]; ";
  if (!(tau >= 0.0 && tau <= 1.0)) p += "tau must lie in [0, 1]; ";
  if (!(learning_rate > 0.0)) p += "learning_rate must be > 0; ";
  for (int w : hidden) {
    if (w < 1) p += "hidden widths must be >= 1; ";
  }
  if (actor_hidden) {
    for (int w : *actor_hidden) {
      if (w < 1) p += "actor_hidden widths must be >= 1; ";
    }
  }
  if (td3bc.alpha < 0.0) p += "td3bc.alpha must be >= 0; ";
  if (td3bc.policy_noise < 0.0 || td3bc.noise_clip < 0.0) p += "td3bc noise must be >= 0; ";
  if (td3bc.policy_delay < 1) p += "td3bc.policy_delay must be >= 1; ";
  if (bcq.n_candidates < 1) p += "bcq.n_candidates must be >= 1; ";
  if (bcq.phi < 0.0) p += "bcq.phi must be >= 0; ";
  if (!(bcq.lambda_min >= 0.0 && bcq.lambda_min <= 1.0)) p += "bcq.lambda_min must lie in [0, 1]; ";
  if (bcq.latent_dim < 0) p += "bcq.latent_dim must be >= 0; ";
  if (!(iql.expectile > 0.0 && iql.expectile < 1.0)) p += "iql.expectile must lie in (0, 1); ";
  if (iql.weight_clip <= 0.0) p += "iql.weight_clip must be > 0; ";
  if (!(dac.discriminator_lr > 0.0)) p += "dac.discriminator_lr must be > 0; ";
  if (dac.gradient_penalty < 0.0) p += "dac.gradient_penalty must be >= 0; ";
  if (dac.replay_capacity < 1) p += "dac.replay_capacity must be >= 1; ";
  if (dac.max_env_steps < 0) p += "dac.max_env_steps must be >= 0; ";
  if (dac.policy_delay < 1) p += "dac.policy_delay must be >= 1; ";
  if (!p.empty()) throw ValidationError("invalid algorithm config: " + p);
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ValidationError("unknown key '" + where + "." + it.key() + "'");
  }
}

template <typename V>
void read(const nlohmann::json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

}  // namespace

AlgoConfig algo_config_from_json(AlgoId id, const nlohmann::json& j_in) {
  const nlohmann::json j = j_in.is_null() ? nlohmann::json::object() : j_in;
  AlgoConfig c;
  c.algorithm = id;
  try {
    reject_unknown(j,
                   {"batch_size", "discount", "tau", "learning_rate", "hidden", "activation",
                    "actor_hidden", "actor_output", "td3bc", "bcq", "iql", "dac"},
                   "algo");
    read(j, "batch_size", c.batch_size);
    read(j, "discount", c.discount);
    read(j, "tau", c.tau);
    read(j, "learning_rate", c.learning_rate);
    read(j, "hidden", c.hidden);
    if (j.contains("activation")) {
      const auto a = j.at("activation").get<std::string>();
      if (a != "relu" && a != "tanh") throw ValidationError("algo.activation must be relu or tanh");
      c.activation = a == "relu" ? nn::Activation::relu : nn::Activation::tanh;
    }
    if (j.contains("actor_hidden") && !j.at("actor_hidden").is_null()) {
      c.actor_hidden = j.at("actor_hidden").get<std::vector<int>>();
    }
    if (j.contains("actor_output")) {
      const auto o = j.at("actor_output").get<std::string>();
      if (o != "identity" && o != "tanh_scaled") {
        throw ValidationError("algo.actor_output must be identity or tanh_scaled");
      }
      c.actor_output = o == "identity" ? nn::OutputTransform::identity : nn::OutputTransform::tanh_scaled;
    }
    if (j.contains("td3bc")) {
      const auto& t = j.at("td3bc");
      reject_unknown(t, {"alpha", "policy_noise", "noise_clip", "policy_delay", "normalize_states"},
                     "algo.td3bc");
      read(t, "alpha", c.td3bc.alpha);
      read(t, "policy_noise", c.td3bc.policy_noise);
      read(t, "noise_clip", c.td3bc.noise_clip);
      read(t, "policy_delay", c.td3bc.policy_delay);
      read(t, "normalize_states", c.td3bc.normalize_states);
    }
    if (j.contains("bcq")) {
      const auto& b = j.at("bcq");
      reject_unknown(b, {"n_candidates", "phi", "lambda_min", "latent_dim", "kl_weight"}, "algo.bcq");
      read(b, "n_candidates", c.bcq.n_candidates);
      read(b, "phi", c.bcq.phi);
      read(b, "lambda_min", c.bcq.lambda_min);
      read(b, "latent_dim", c.bcq.latent_dim);
      read(b, "kl_weight", c.bcq.kl_weight);
    }
    if (j.contains("iql")) {
      const auto& q = j.at("iql");
      reject_unknown(q, {"expectile", "beta", "weight_clip"}, "algo.iql");
      read(q, "expectile", c.iql.expectile);
      read(q, "beta", c.iql.beta);
      read(q, "weight_clip", c.iql.weight_clip);
    }
    if (j.contains("dac")) {
      const auto& d = j.at("dac");
      reject_unknown(d,
                     {"discriminator_lr", "gradient_penalty", "replay_capacity", "exploration_noise",
                      "start_steps", "max_env_steps", "policy_noise", "noise_clip", "policy_delay"},
                     "algo.dac");
      read(d, "discriminator_lr", c.dac.discriminator_lr);
      read(d, "gradient_penalty", c.dac.gradient_penalty);
      read(d, "replay_capacity", c.dac.replay_capacity);
      read(d, "exploration_noise", c.dac.exploration_noise);
      read(d, "start_steps", c.dac.start_steps);
      read(d, "max_env_steps", c.dac.max_env_steps);
      read(d, "policy_noise", c.dac.policy_noise);
      read(d, "noise_clip", c.dac.noise_clip);
      read(d, "policy_delay", c.dac.policy_delay);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad algorithm config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const AlgoConfig& c) {
  nlohmann::json j;
  j["batch_size"] = c.batch_size;
  j["discount"] = c.discount;
  j["tau"] = c.tau;
  j["learning_rate"] = c.learning_rate;
  j["hidden"] = c.hidden;
  j["activation"] = c.activation == nn::Activation::relu ? "relu" : "tanh";
  j["actor_hidden"] = c.actor_hidden ? nlohmann::json(*c.actor_hidden) : nlohmann::json(nullptr);
  j["actor_output"] = c.actor_output == nn::OutputTransform::identity ? "identity" : "tanh_scaled";
  j["td3bc"] = {{"alpha", c.td3bc.alpha},
                {"policy_noise", c.td3bc.policy_noise},
                {"noise_clip", c.td3bc.noise_clip},
                {"policy_delay", c.td3bc.policy_delay},
                {"normalize_states", c.td3bc.normalize_states}};
  j["bcq"] = {{"n_candidates", c.bcq.n_candidates},
              {"phi", c.bcq.phi},
              {"lambda_min", c.bcq.lambda_min},
              {"latent_dim", c.bcq.latent_dim},
              {"kl_weight", c.bcq.kl_weight}};
  j["iql"] = {{"expectile", c.iql.expectile}, {"beta", c.iql.beta}, {"weight_clip", c.iql.weight_clip}};
  j["dac"] = {{"discriminator_lr", c.dac.discriminator_lr},
              {"gradient_penalty", c.dac.gradient_penalty},
              {"replay_capacity", c.dac.replay_capacity},
              {"exploration_noise", c.dac.exploration_noise},
              {"start_steps", c.dac.start_steps},
              {"max_env_steps", c.dac.max_env_steps},
              {"policy_noise", c.dac.policy_noise},
              {"noise_clip", c.dac.noise_clip},
              {"policy_delay", c.dac.policy_delay}};
  return j;
}

ProblemSpec ProblemSpec::from_bounds(int state_dim, const Eigen::VectorXd& low,
                                     const Eigen::VectorXd& high, std::string env_name,
                                     nlohmann::json env_options) {
  if (state_dim < 1 || low.size() < 1 || low.size() != high.size()) {
    throw ValidationError("problem dims must be positive and bounds consistent");
  }
  const double bound = high[0];
  for (Eigen::Index i = 0; i < high.size(); ++i) {
    if (std::abs(high[i] - bound) > 1e-12 || std::abs(low[i] + bound) > 1e-12 || !(bound > 0.0)) {
      throw ValidationError("learned actors need a symmetric action box with one bound for all dims");
    }
  }
  ProblemSpec p;
  p.state_dim = state_dim;
  p.action_dim = static_cast<int>(low.size());
  p.max_action = static_cast<float>(bound);
  p.env_name = std::move(env_name);
  p.env_options = std::move(env_options);
  return p;
}

}  // namespace osb::algo
