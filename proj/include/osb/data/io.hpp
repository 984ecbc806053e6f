#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "osb/data/dataset.hpp"

namespace osb::data {

inline constexpr int kNativeFormatVersion = 1;

// Parsed `manifest.txt` of a native dataset directory.
struct DatasetManifest {
  int version = 0;
  std::string env_name;
  DataSource source = DataSource::generated;
  int state_dim = 0;
  int action_dim = 0;
  Index n_transitions = 0;
  Index n_trajectories = 0;
};

// Directory layout:
//   manifest.txt        key: value lines
//   states.f32 actions.f32 rewards.f32 next_states.f32   little-endian float32, row-major
//   dones.u8            one byte per transition
//   episode_starts.u64  little-endian uint64, first row of each trajectory
// Empty datasets are rejected.
void save_native(const TrajectoryDataset& data, const std::filesystem::path& dir);
TrajectoryDataset load_native(const std::filesystem::path& dir);
DatasetManifest read_manifest(const std::filesystem::path& dir);

// Reads the flat-array offline-RL corpus layout from HDF5: datasets
// `observations` (N x n), `actions` (N x m), `rewards`, `terminals`,
// `timeouts` (N), and optionally `next_observations`. Trajectories end where
// terminals or timeouts are set (and at end of file). Without
// next_observations, s' is the following observation within a trajectory and
// repeats the last observation at a trajectory end.
TrajectoryDataset import_external(const std::filesystem::path& path,
                                  const std::string& env_name = "imported");

// Minimal `key: value` text format shared by manifests.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& file);
void write_key_values(const std::filesystem::path& file,
                      const std::vector<std::pair<std::string, std::string>>& entries);

// Raw little-endian column files.
void write_f32(const std::filesystem::path& file, const float* values, std::size_t count);
std::vector<float> read_f32(const std::filesystem::path& file);

}  // namespace osb::data
