#include "osb/data/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "osb/core/error.hpp"

namespace osb::data {

namespace fs = std::filesystem;

namespace {

template <typename T>
void to_little_endian(T* values, std::size_t count) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < count; ++i) {
      auto* bytes = reinterpret_cast<unsigned char*>(&values[i]);
      std::reverse(bytes, bytes + sizeof(T));
    }
  } else {
    (void)values;
    (void)count;
  }
}

template <typename T>
void write_raw(const fs::path& file, const T* values, std::size_t count) {
  std::vector<T> buffer(values, values + count);
  to_little_endian(buffer.data(), count);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open " + file.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
  if (!out) throw RuntimeFailure("write failed for " + file.string());
}

template <typename T>
std::vector<T> read_raw(const fs::path& file) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw ValidationError("missing file " + file.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes % sizeof(T) != 0) throw ValidationError("truncated file " + file.string());
  std::vector<T> values(bytes / sizeof(T));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw ValidationError("read failed for " + file.string());
  to_little_endian(values.data(), values.size());
  return values;
}

Index parse_index(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("manifest missing key '" + key + "'");
  try {
    return static_cast<Index>(std::stoll(it->second));
  } catch (const std::exception&) {
    throw ValidationError("manifest key '" + key + "' is not an integer: " + it->second);
  }
}

}  // namespace

std::map<std::string, std::string> read_key_values(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("missing file " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ValidationError("malformed line in " + file.string());
    std::string key = line.substr(0, colon);
    std::string value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    kv[key] = value;
  }
  return kv;
}

void write_key_values(const fs::path& file,
                      const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open " + file.string() + " for writing");
  for (const auto& [k, v] : entries) out << k << ": " << v << '\n';
  if (!out) throw RuntimeFailure("write failed for " + file.string());
}

void write_f32(const fs::path& file, const float* values, std::size_t count) {
  write_raw(file, values, count);
}

std::vector<float> read_f32(const fs::path& file) { return read_raw<float>(file); }

void save_native(const TrajectoryDataset& data, const fs::path& dir) {
  data.validate();
  const Index n = data.total_transitions();
  if (n == 0) throw ValidationError("refusing to save an empty dataset");
  fs::create_directories(dir);
  const TransitionDataset flat = flatten(data);
  std::vector<std::uint64_t> starts;
  std::uint64_t row = 0;
  for (const auto& t : data.trajectories) {
    starts.push_back(row);
    row += static_cast<std::uint64_t>(t.length());
  }
  const auto count = [](const RowMatrixF& m) { return static_cast<std::size_t>(m.size()); };
  write_raw(dir / "states.f32", flat.states.data(), count(flat.states));
  write_raw(dir / "actions.f32", flat.actions.data(), count(flat.actions));
  write_raw(dir / "rewards.f32", flat.rewards.data(), static_cast<std::size_t>(n));
  write_raw(dir / "next_states.f32", flat.next_states.data(), count(flat.next_states));
  write_raw(dir / "dones.u8", flat.dones.data(), flat.dones.size());
  write_raw(dir / "episode_starts.u64", starts.data(), starts.size());
  // Manifest last: its presence marks a complete dataset.
  write_key_values(dir / "manifest.txt",
                   {{"format", "osb-trajectory-dataset"},
                    {"version", std::to_string(kNativeFormatVersion)},
                    {"env_name", data.env_name},
                    {"source", to_string(data.source)},
                    {"state_dim", std::to_string(data.state_dim)},
                    {"action_dim", std::to_string(data.action_dim)},
                    {"n_transitions", std::to_string(n)},
                    {"n_trajectories", std::to_string(data.trajectories.size())}});
}

DatasetManifest read_manifest(const fs::path& dir) {
  const auto kv = read_key_values(dir / "manifest.txt");
  auto format = kv.find("format");
  if (format == kv.end() || format->second != "osb-trajectory-dataset") {
    throw ValidationError(dir.string() + " is not a native dataset directory");
  }
  DatasetManifest m;
  m.version = static_cast<int>(parse_index(kv, "version"));
  if (m.version != kNativeFormatVersion) {
    throw ValidationError("dataset format version " + std::to_string(m.version) +
                          " unsupported (expected " + std::to_string(kNativeFormatVersion) + ")");
  }
  auto env = kv.find("env_name");
  m.env_name = env == kv.end() ? "" : env->second;
  auto src = kv.find("source");
  m.source = src == kv.end() ? DataSource::generated : parse_data_source(src->second);
  m.state_dim = static_cast<int>(parse_index(kv, "state_dim"));
  m.action_dim = static_cast<int>(parse_index(kv, "action_dim"));
  m.n_transitions = parse_index(kv, "n_transitions");
  m.n_trajectories = parse_index(kv, "n_trajectories");
  return m;
}

TrajectoryDataset load_native(const fs::path& dir) {
  const DatasetManifest m = read_manifest(dir);
  const auto n = static_cast<std::size_t>(m.n_transitions);
  const auto sd = static_cast<std::size_t>(m.state_dim);
  const auto ad = static_cast<std::size_t>(m.action_dim);
  auto states = read_raw<float>(dir / "states.f32");
  auto actions = read_raw<float>(dir / "actions.f32");
  auto rewards = read_raw<float>(dir / "rewards.f32");
  auto next_states = read_raw<float>(dir / "next_states.f32");
  auto dones = read_raw<std::uint8_t>(dir / "dones.u8");
  auto starts = read_raw<std::uint64_t>(dir / "episode_starts.u64");
  if (states.size() != n * sd || next_states.size() != n * sd || actions.size() != n * ad ||
      rewards.size() != n || dones.size() != n ||
      starts.size() != static_cast<std::size_t>(m.n_trajectories)) {
    throw ValidationError("dataset files in " + dir.string() + " disagree with manifest");
  }
  TrajectoryDataset data;
  data.env_name = m.env_name;
  data.source = m.source;
  data.state_dim = m.state_dim;
  data.action_dim = m.action_dim;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t begin = starts[k];
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : n;
    if (begin >= end || end > n) throw ValidationError("corrupt episode_starts in " + dir.string());
    const auto len = static_cast<Index>(end - begin);
    Trajectory t;
    t.states = Eigen::Map<const RowMatrixF>(states.data() + begin * sd, len, m.state_dim);
    t.actions = Eigen::Map<const RowMatrixF>(actions.data() + begin * ad, len, m.action_dim);
    t.next_states = Eigen::Map<const RowMatrixF>(next_states.data() + begin * sd, len, m.state_dim);
    t.rewards = Eigen::Map<const Eigen::VectorXf>(rewards.data() + begin, len);
    t.dones.assign(dones.begin() + static_cast<std::ptrdiff_t>(begin),
                   dones.begin() + static_cast<std::ptrdiff_t>(end));
    data.trajectories.push_back(std::move(t));
  }
  if (!starts.empty() && starts.front() != 0) {
    throw ValidationError("corrupt episode_starts in " + dir.string());
  }
  return data;
}

}  // namespace osb::data
