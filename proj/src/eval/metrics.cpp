#include "osb/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "osb/core/error.hpp"
#include "osb/core/seed.hpp"

namespace osb::eval {

double discounted_return(const env::Trajectory& traj, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in [0, 1]");
  double total = 0.0;
  double weight = 1.0;
  for (Eigen::Index t = 0; t < traj.rewards.size(); ++t) {
    total += weight * static_cast<double>(traj.rewards[t]);
    weight *= gamma;
  }
  return total;
}

double evaluate_policy(env::Env& env, const env::Policy& policy, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw ValidationError("n_episodes must be >= 1");
  double sum = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    auto traj = env::rollout(env, policy, env.spec().max_episode_steps,
                             derive_seed(seed, static_cast<std::uint64_t>(i)), 0.0);
    sum += discounted_return(traj, 1.0);
  }
  return sum / n_episodes;
}

env::Policy checkpoint_policy(const algo::PolicyCheckpoint& ckpt) {
  return [&ckpt](const env::Vec& s) -> env::Vec {
    return algo::select_action(ckpt, s.cast<float>()).cast<double>();
  };
}

double online_evaluate(const algo::PolicyCheckpoint& ckpt, env::Env& env, int n_episodes,
                       std::uint64_t seed) {
  if (env.spec().state_dim != ckpt.state_dim || env.spec().action_dim != ckpt.action_dim) {
    throw ValidationError("checkpoint dims do not match environment " + env.spec().name);
  }
  return evaluate_policy(env, checkpoint_policy(ckpt), n_episodes, seed);
}

void ScoreAnchors::validate() const {
  if (!std::isfinite(random_score) || !std::isfinite(expert_score)) {
    throw ValidationError("score anchors must be finite");
  }
  if (expert_score == random_score) throw ValidationError("expert and random anchors are equal");
}

double normalized_score(double raw, const ScoreAnchors& anchors) {
  anchors.validate();
  return 100.0 * (raw - anchors.random_score) / (anchors.expert_score - anchors.random_score);
}

ScoreAnchors measure_anchors(env::Env& env, int n_episodes, std::uint64_t seed) {
  ScoreAnchors a;
  a.episodes = n_episodes;
  a.seed = seed;
  const std::uint64_t episodes_seed = derive_seed(seed, "anchor-episodes");
  a.random_score = evaluate_policy(
      env, env::uniform_random_policy(env.spec(), derive_seed(seed, "random-policy")), n_episodes,
      episodes_seed);
  a.expert_score = evaluate_policy(env, env.expert_policy(), n_episodes, episodes_seed);
  a.validate();
  return a;
}

void save_anchors(const ScoreAnchors& anchors, const std::filesystem::path& file) {
  nlohmann::json j = {{"random_score", anchors.random_score},
                      {"expert_score", anchors.expert_score},
                      {"episodes", anchors.episodes},
                      {"seed", anchors.seed}};
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

ScoreAnchors load_anchors(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot read anchors file " + file.string());
  try {
    nlohmann::json j;
    in >> j;
    ScoreAnchors a;
    a.random_score = j.at("random_score").get<double>();
    a.expert_score = j.at("expert_score").get<double>();
    a.episodes = j.value("episodes", 0);
    a.seed = j.value("seed", std::uint64_t{0});
    a.validate();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed anchors file " + file.string() + ": " + e.what());
  }
}

double action_mse(const algo::PolicyCheckpoint& ckpt, const data::TransitionDataset& slice,
                  int batch_size) {
  if (slice.size() == 0) throw ValidationError("action_mse needs a non-empty slice");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (slice.state_dim() != ckpt.state_dim || slice.action_dim() != ckpt.action_dim) {
    throw ValidationError(fmt::format("dataset dims ({}, {}) do not match checkpoint dims ({}, {})",
                                      slice.state_dim(), slice.action_dim(), ckpt.state_dim,
                                      ckpt.action_dim));
  }
  double sum = 0.0;
  for (Eigen::Index start = 0; start < slice.size(); start += batch_size) {
    const Eigen::Index n = std::min<Eigen::Index>(batch_size, slice.size() - start);
    nn::Matrix<float> states = slice.states.middleRows(start, n);
    nn::Matrix<float> actions = slice.actions.middleRows(start, n);
    const nn::Matrix<float> pi = algo::select_actions(ckpt, states);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < pi.cols(); ++j) {
        const double d = static_cast<double>(pi(i, j)) - static_cast<double>(actions(i, j));
        sum += d * d;
      }
    }
  }
  return sum / (static_cast<double>(slice.size()) * slice.action_dim());
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double rank_correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("rank_correlation needs equal-length inputs");
  if (xs.size() < 3) throw ValidationError("rank_correlation needs at least 3 points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw ValidationError("rank_correlation inputs must be finite");
    }
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("rank_correlation: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::int64_t early_stop_select(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw ValidationError("early_stop_select needs at least one row");
  const MetricsRow* best = nullptr;
  for (const auto& r : rows) {
    if (!std::isfinite(r.val_mse)) throw ValidationError("early_stop_select: non-finite val_mse");
    if (!best || r.val_mse < best->val_mse ||
        (r.val_mse == best->val_mse && r.update_index < best->update_index)) {
      best = &r;
    }
  }
  return best->update_index;
}

namespace {

std::string num(double v) { return fmt::format("{}", v); }
std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string metrics_header() {
  return "run_id,algorithm,dataset_size,seed,update_index,train_mse,val_mse,online_return,"
         "normalized_score";
}

std::string to_csv_line(const MetricsRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", r.run_id, r.algorithm, r.dataset_size, r.seed,
                     r.update_index, num(r.train_mse), num(r.val_mse), opt(r.online_return),
                     opt(r.normalized_score));
}

MetricsRow parse_csv_line(const std::string& line) {
  const auto c = split_commas(line);
  if (c.size() != 9) throw ValidationError("metrics row has " + std::to_string(c.size()) + " fields");
  MetricsRow r;
  try {
    r.run_id = c[0];
    r.algorithm = c[1];
    r.dataset_size = std::stoll(c[2]);
    r.seed = std::stoull(c[3]);
    r.update_index = std::stoll(c[4]);
    r.train_mse = std::stod(c[5]);
    r.val_mse = std::stod(c[6]);
    if (!c[7].empty()) r.online_return = std::stod(c[7]);
    if (!c[8].empty()) r.normalized_score = std::stod(c[8]);
  } catch (const std::logic_error&) {
    throw ValidationError("malformed metrics row: " + line);
  }
  return r;
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot read metrics file " + file.string());
  std::string line;
  if (!std::getline(in, line) || line != metrics_header()) {
    throw ValidationError(file.string() + " does not start with the metrics header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

}  // namespace osb::eval
