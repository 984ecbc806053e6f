#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "osb/algo/config.hpp"
#include "osb/data/dataset.hpp"

namespace osb::sweep {

inline constexpr int kConfigVersion = 1;

struct DataConfig {
  // Training pool size; validation trajectories are collected on top of it.
  std::int64_t full_size = 100000;
  std::int64_t n_val_trajectories = 100;
  double expert_noise_std = 0.1;
  std::uint64_t seed = 0;
  data::SubsampleMode subsample_mode = data::SubsampleMode::trajectory_prefix;
  // Existing native dataset directory or .hdf5/.h5 file; empty means generate.
  std::string path;
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::string env_name = "pointreacher-v0";
  nlohmann::json env_options = nlohmann::json::object();
  DataConfig data;
  std::vector<algo::AlgoId> algorithms = {algo::AlgoId::bc, algo::AlgoId::td3bc, algo::AlgoId::bcq,
                                          algo::AlgoId::iql};
  std::vector<std::int64_t> dataset_sizes = {100000, 10000, 500};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::int64_t n_updates = 50000;
  std::int64_t eval_every = 1000;
  std::int64_t checkpoint_every = 10000;
  int eval_episodes = 10;
  std::uint64_t eval_seed = 1000;
  std::int64_t train_probe_size = 10000;
  int anchor_episodes = 100;
  bool save_checkpoints = true;
  int parallelism = 1;
  nlohmann::json algo = nlohmann::json::object();  // AlgoConfig overrides shared by all algorithms
  std::string output_root = "runs";

  // Every violated constraint in one ValidationError.
  void validate() const;
  algo::AlgoConfig algo_config(algo::AlgoId id) const;
};

// Applies `key.path=value` overrides to a raw config tree. Values parse as
// JSON when possible and fall back to plain strings.
void apply_override(nlohmann::json& tree, const std::string& assignment);

ExperimentConfig config_from_json(const nlohmann::json& tree);
nlohmann::json to_json(const ExperimentConfig& config);

// Reads a JSON config file, applies overrides, parses and validates.
ExperimentConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::string>& overrides = {});

// Hash of everything that shapes the shared data (env + data block).
std::string data_digest(const ExperimentConfig& config);

}  // namespace osb::sweep
