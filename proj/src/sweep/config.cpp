#include "osb/sweep/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "osb/core/error.hpp"
#include "osb/core/seed.hpp"
#include "osb/env/registry.hpp"

namespace osb::sweep {

using nlohmann::json;

namespace {

template <typename V>
void read(const json& j, const char* key, V& out, std::vector<std::string>& errors,
          const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const json::exception&) {
    errors.push_back(where + key + " has the wrong type");
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where,
                std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back((where.empty() ? "config" : where) + " must be an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) errors.push_back("unknown key '" + where + it.key() + "'");
  }
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += "\n  - " + p;
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  std::vector<std::string> e;
  if (version != kConfigVersion) {
    e.push_back("version " + std::to_string(version) + " unsupported (expected " +
                std::to_string(kConfigVersion) + ")");
  }
  const auto& envs = env::registered_envs();
  if (data.path.empty() && std::find(envs.begin(), envs.end(), env_name) == envs.end()) {
    e.push_back("unknown env '" + env_name + "'");
  }
  if (algorithms.empty()) e.push_back("algorithms must not be empty");
  if (dataset_sizes.empty()) e.push_back("dataset_sizes must not be empty");
  if (seeds.empty()) e.push_back("seeds must not be empty");
  for (auto s : dataset_sizes) {
    if (s < 1) e.push_back("dataset sizes must be >= 1");
    if (s > data.full_size && data.path.empty()) {
      e.push_back("dataset size " + std::to_string(s) + " exceeds data.full_size");
    }
  }
  if (data.full_size < 1) e.push_back("data.full_size must be >= 1");
  if (data.n_val_trajectories < 1) e.push_back("data.n_val_trajectories must be >= 1");
  if (data.expert_noise_std < 0.0) e.push_back("data.expert_noise_std must be >= 0");
  if (n_updates < 0) e.push_back("n_updates must be >= 0");
  if (eval_every < 1) e.push_back("eval_every must be >= 1");
  if (checkpoint_every < 1) e.push_back("checkpoint_every must be >= 1");
  if (eval_every >= 1 && checkpoint_every >= 1 && eval_every % checkpoint_every != 0 &&
      checkpoint_every % eval_every != 0) {
    e.push_back("eval_every and checkpoint_every must divide one another");
  }
  if (eval_episodes < 1) e.push_back("eval_episodes must be >= 1");
  if (anchor_episodes < 1) e.push_back("anchor_episodes must be >= 1");
  if (train_probe_size < 1) e.push_back("train_probe_size must be >= 1");
  if (parallelism < 1) e.push_back("parallelism must be >= 1");
  if (output_root.empty()) e.push_back("output_root must not be empty");
  for (auto id : algorithms) {
    try {
      algo_config(id);
    } catch (const ValidationError& ex) {
      e.push_back(ex.what());
    }
  }
  if (!e.empty()) throw ValidationError("invalid experiment config:" + join(e));
}

algo::AlgoConfig ExperimentConfig::algo_config(algo::AlgoId id) const {
  return algo::algo_config_from_json(id, algo);
}

void apply_override(json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &tree;
  std::istringstream parts(path);
  std::string part;
  std::vector<std::string> keys;
  while (std::getline(parts, part, '.')) keys.push_back(part);
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (keys[i].empty()) throw ValidationError("override key '" + path + "' has an empty segment");
    json& next = (*node)[keys[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("override '" + path + "' descends into a non-object");
    node = &next;
  }
  (*node)[keys.back()] = std::move(value);
}

ExperimentConfig config_from_json(const json& tree) {
  std::vector<std::string> e;
  ExperimentConfig c;
  check_keys(tree,
             {"version", "env", "data", "algorithms", "dataset_sizes", "seeds", "n_updates",
              "eval_every", "checkpoint_every", "eval_episodes", "eval_seed", "train_probe_size",
              "anchor_episodes", "save_checkpoints", "parallelism", "algo", "output_root"},
             "", e);
  if (!tree.is_object()) throw ValidationError("invalid experiment config:" + join(e));
  read(tree, "version", c.version, e, "");
  if (tree.contains("env")) {
    const auto& env = tree.at("env");
    if (env.is_string()) {
      c.env_name = env.get<std::string>();
    } else {
      check_keys(env, {"name", "options"}, "env.", e);
      if (env.is_object()) {
        read(env, "name", c.env_name, e, "env.");
        if (env.contains("options")) c.env_options = env.at("options");
      }
    }
  }
  if (tree.contains("data")) {
    const auto& d = tree.at("data");
    check_keys(d, {"full_size", "n_val_trajectories", "expert_noise_std", "seed", "subsample_mode", "path"},
               "data.", e);
    if (d.is_object()) {
      read(d, "full_size", c.data.full_size, e, "data.");
      read(d, "n_val_trajectories", c.data.n_val_trajectories, e, "data.");
      read(d, "expert_noise_std", c.data.expert_noise_std, e, "data.");
      read(d, "seed", c.data.seed, e, "data.");
      read(d, "path", c.data.path, e, "data.");
      if (d.contains("subsample_mode")) {
        try {
          c.data.subsample_mode = data::parse_subsample_mode(d.at("subsample_mode").get<std::string>());
        } catch (const std::exception& ex) {
          e.push_back(std::string("data.subsample_mode: ") + ex.what());
        }
      }
    }
  }
  if (tree.contains("algorithms")) {
    std::vector<std::string> names;
    read(tree, "algorithms", names, e, "");
    c.algorithms.clear();
    for (const auto& n : names) {
      try {
        c.algorithms.push_back(algo::parse_algo_id(n));
      } catch (const ValidationError& ex) {
        e.push_back(ex.what());
      }
    }
  }
  read(tree, "dataset_sizes", c.dataset_sizes, e, "");
  read(tree, "seeds", c.seeds, e, "");
  read(tree, "n_updates", c.n_updates, e, "");
  read(tree, "eval_every", c.eval_every, e, "");
  read(tree, "checkpoint_every", c.checkpoint_every, e, "");
  read(tree, "eval_episodes", c.eval_episodes, e, "");
  read(tree, "eval_seed", c.eval_seed, e, "");
  read(tree, "train_probe_size", c.train_probe_size, e, "");
  read(tree, "anchor_episodes", c.anchor_episodes, e, "");
  read(tree, "save_checkpoints", c.save_checkpoints, e, "");
  read(tree, "parallelism", c.parallelism, e, "");
  read(tree, "output_root", c.output_root, e, "");
  if (tree.contains("algo")) c.algo = tree.at("algo");
  if (!e.empty()) throw ValidationError("invalid experiment config:" + join(e));
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["env"] = {{"name", c.env_name}, {"options", c.env_options}};
  j["data"] = {{"full_size", c.data.full_size},
               {"n_val_trajectories", c.data.n_val_trajectories},
               {"expert_noise_std", c.data.expert_noise_std},
               {"seed", c.data.seed},
               {"subsample_mode", data::to_string(c.data.subsample_mode)},
               {"path", c.data.path}};
  std::vector<std::string> names;
  for (auto id : c.algorithms) names.push_back(algo::to_string(id));
  j["algorithms"] = names;
  j["dataset_sizes"] = c.dataset_sizes;
  j["seeds"] = c.seeds;
  j["n_updates"] = c.n_updates;
  j["eval_every"] = c.eval_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_seed"] = c.eval_seed;
  j["train_probe_size"] = c.train_probe_size;
  j["anchor_episodes"] = c.anchor_episodes;
  j["save_checkpoints"] = c.save_checkpoints;
  j["parallelism"] = c.parallelism;
  j["algo"] = c.algo;
  j["output_root"] = c.output_root;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot read config file " + file.string());
  json tree = json::parse(in, nullptr, false, true);
  if (tree.is_discarded()) throw ValidationError(file.string() + " is not valid JSON");
  for (const auto& o : overrides) apply_override(tree, o);
  return config_from_json(tree);
}

std::string data_digest(const ExperimentConfig& c) {
  json j = {{"layout", 1},
            {"env", c.env_name},
            {"options", c.env_options},
            {"full_size", c.data.full_size},
            {"n_val_trajectories", c.data.n_val_trajectories},
            {"expert_noise_std", c.data.expert_noise_std},
            {"seed", c.data.seed},
            {"path", c.data.path},
            {"anchor_episodes", c.anchor_episodes}};
  return hex64(fnv1a64(j.dump())).substr(0, 12);
}

}  // namespace osb::sweep
