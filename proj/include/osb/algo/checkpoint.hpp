#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "osb/algo/config.hpp"
#include "osb/data/dataset.hpp"
#include "osb/nn/mlp.hpp"

namespace osb::algo {

struct NetworkSnapshot {
  nn::MLPSpec spec;
  nn::Params<float> params;
};

// Immutable snapshot of a learner after `update_index` gradient updates.
// Networks by role: "actor" always; "critic1"/"critic2", "value",
// "vae_encoder"/"vae_decoder", "discriminator" when the method has them.
struct PolicyCheckpoint {
  std::int64_t update_index = 0;
  AlgoId algorithm = AlgoId::bc;
  int state_dim = 0;
  int action_dim = 0;
  float max_action = 1.0f;
  data::NormalizationStats normalization;
  std::map<std::string, NetworkSnapshot> networks;
  // BCQ: perturbation limit and the fixed latent codes decoded at selection time.
  double phi = 0.0;
  nn::Matrix<float> latent_candidates;
  nlohmann::json config_echo = nlohmann::json::object();

  const NetworkSnapshot& network(const std::string& role) const;
};

// Deterministic greedy actions, one row per state row, inside the action box.
// BCQ returns, per state, the perturbed decoded candidate with the highest Q1.
nn::Matrix<float> select_actions(const PolicyCheckpoint& ckpt, const nn::Matrix<float>& states);
Eigen::VectorXf select_action(const PolicyCheckpoint& ckpt, const Eigen::VectorXf& state);

// Directory with manifest.txt, one <role>.f32 per network, normalization.f32,
// latents.f32 (BCQ) and config.json (the training config echo).
void save_checkpoint(const PolicyCheckpoint& ckpt, const std::filesystem::path& dir);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& dir);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace osb::algo
