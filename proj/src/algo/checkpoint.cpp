#include "osb/algo/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "osb/core/error.hpp"
#include "osb/data/io.hpp"

namespace osb::algo {

namespace fs = std::filesystem;
using nn::Matrix;

const NetworkSnapshot& PolicyCheckpoint::network(const std::string& role) const {
  auto it = networks.find(role);
  if (it == networks.end()) {
    throw ValidationError("checkpoint for " + to_string(algorithm) + " has no '" + role + "' network");
  }
  return it->second;
}

namespace {

Matrix<float> hcat(const Matrix<float>& a, const Matrix<float>& b) {
  Matrix<float> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

Matrix<float> normalize_rows(const data::NormalizationStats& stats, const Matrix<float>& states) {
  Matrix<float> out = states;
  out.rowwise() -= stats.state_mean.transpose();
  out.array().rowwise() /= stats.state_std.transpose().array();
  return out;
}

Matrix<float> bcq_select(const PolicyCheckpoint& ckpt, const Matrix<float>& states) {
  const auto& decoder = ckpt.network("vae_decoder");
  const auto& actor = ckpt.network("actor");
  const auto& critic = ckpt.network("critic1");
  const Eigen::Index n = states.rows();
  const Eigen::Index k = ckpt.latent_candidates.rows();
  Matrix<float> rep_states(n * k, states.cols());
  Matrix<float> rep_latents(n * k, ckpt.latent_candidates.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    rep_states.middleRows(i * k, k) = states.row(i).replicate(k, 1);
    rep_latents.middleRows(i * k, k) = ckpt.latent_candidates;
  }
  const Matrix<float> decoded = nn::forward(decoder.spec, decoder.params, hcat(rep_states, rep_latents));
  const Matrix<float> xi = nn::forward(actor.spec, actor.params, hcat(rep_states, decoded));
  const float limit = static_cast<float>(ckpt.phi) * ckpt.max_action;
  const Matrix<float> perturbed =
      (decoded + xi.cwiseMax(-limit).cwiseMin(limit)).cwiseMax(-ckpt.max_action).cwiseMin(ckpt.max_action);
  const Matrix<float> q = nn::forward(critic.spec, critic.params, hcat(rep_states, perturbed));
  Matrix<float> out(n, ckpt.action_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    q.col(0).segment(i * k, k).maxCoeff(&best);
    out.row(i) = perturbed.row(i * k + best);
  }
  return out;
}

std::string format_floats(const Eigen::VectorXf& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v[i]));
    out += (i ? "," : "") + std::string(buf);
  }
  return out;
}

std::string require(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ValidationError("checkpoint manifest missing '" + key + "'");
  return it->second;
}

}  // namespace

Matrix<float> select_actions(const PolicyCheckpoint& ckpt, const Matrix<float>& states) {
  if (states.cols() != ckpt.state_dim) {
    throw ValidationError("state width " + std::to_string(states.cols()) +
                          " does not match checkpoint state_dim " + std::to_string(ckpt.state_dim));
  }
  const Matrix<float> input = normalize_rows(ckpt.normalization, states);
  if (ckpt.algorithm == AlgoId::bcq) return bcq_select(ckpt, input);
  const auto& actor = ckpt.network("actor");
  return nn::forward(actor.spec, actor.params, input).cwiseMax(-ckpt.max_action).cwiseMin(ckpt.max_action);
}

Eigen::VectorXf select_action(const PolicyCheckpoint& ckpt, const Eigen::VectorXf& state) {
  Matrix<float> row = state.transpose();
  return select_actions(ckpt, row).row(0).transpose();
}

void save_checkpoint(const PolicyCheckpoint& ckpt, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> manifest = {
      {"format", "osb-policy-checkpoint"},
      {"version", std::to_string(kCheckpointFormatVersion)},
      {"algorithm", to_string(ckpt.algorithm)},
      {"update_index", std::to_string(ckpt.update_index)},
      {"state_dim", std::to_string(ckpt.state_dim)},
      {"action_dim", std::to_string(ckpt.action_dim)},
      {"max_action", format_floats(Eigen::VectorXf::Constant(1, ckpt.max_action))},
      {"phi", format_floats(Eigen::VectorXf::Constant(1, static_cast<float>(ckpt.phi)))},
  };
  std::string roles;
  for (const auto& [role, net] : ckpt.networks) {
    roles += (roles.empty() ? "" : ",") + role;
    manifest.emplace_back("network." + role, nn::to_string(net.spec));
    data::write_f32(dir / (role + ".f32"), net.params.values.data(),
                    static_cast<std::size_t>(net.params.size()));
  }
  manifest.emplace_back("networks", roles);
  Eigen::VectorXf norm(2 * ckpt.state_dim);
  norm << ckpt.normalization.state_mean, ckpt.normalization.state_std;
  data::write_f32(dir / "normalization.f32", norm.data(), static_cast<std::size_t>(norm.size()));
  manifest.emplace_back("latent_rows", std::to_string(ckpt.latent_candidates.rows()));
  manifest.emplace_back("latent_cols", std::to_string(ckpt.latent_candidates.cols()));
  if (ckpt.latent_candidates.size() > 0) {
    data::write_f32(dir / "latents.f32", ckpt.latent_candidates.data(),
                    static_cast<std::size_t>(ckpt.latent_candidates.size()));
  }
  {
    std::ofstream out(dir / "config.json", std::ios::trunc);
    out << ckpt.config_echo.dump(2) << '\n';
  }
  data::write_key_values(dir / "manifest.txt", manifest);
}

PolicyCheckpoint load_checkpoint(const fs::path& dir) {
  const auto kv = data::read_key_values(dir / "manifest.txt");
  if (require(kv, "format") != "osb-policy-checkpoint") {
    throw ValidationError(dir.string() + " is not a policy checkpoint");
  }
  if (require(kv, "version") != std::to_string(kCheckpointFormatVersion)) {
    throw ValidationError("checkpoint version " + require(kv, "version") + " unsupported");
  }
  PolicyCheckpoint ckpt;
  try {
    ckpt.algorithm = parse_algo_id(require(kv, "algorithm"));
    ckpt.update_index = std::stoll(require(kv, "update_index"));
    ckpt.state_dim = std::stoi(require(kv, "state_dim"));
    ckpt.action_dim = std::stoi(require(kv, "action_dim"));
    ckpt.max_action = std::stof(require(kv, "max_action"));
    ckpt.phi = std::stof(require(kv, "phi"));
  } catch (const std::logic_error&) {
    throw ValidationError("malformed checkpoint manifest in " + dir.string());
  }
  std::istringstream roles(require(kv, "networks"));
  std::string role;
  while (std::getline(roles, role, ',')) {
    NetworkSnapshot net;
    net.spec = nn::parse_mlp_spec(require(kv, "network." + role));
    const auto values = data::read_f32(dir / (role + ".f32"));
    net.params.shapes = nn::parameter_layout(net.spec);
    if (static_cast<Eigen::Index>(values.size()) != net.spec.num_params()) {
      throw ValidationError("parameter file for '" + role + "' has wrong length");
    }
    net.params.values = Eigen::Map<const Eigen::VectorXf>(values.data(), net.spec.num_params());
    ckpt.networks.emplace(role, std::move(net));
  }
  const auto norm = data::read_f32(dir / "normalization.f32");
  if (static_cast<int>(norm.size()) != 2 * ckpt.state_dim) {
    throw ValidationError("normalization.f32 has wrong length");
  }
  ckpt.normalization.state_mean = Eigen::Map<const Eigen::VectorXf>(norm.data(), ckpt.state_dim);
  ckpt.normalization.state_std =
      Eigen::Map<const Eigen::VectorXf>(norm.data() + ckpt.state_dim, ckpt.state_dim);
  const auto rows = std::stoll(require(kv, "latent_rows"));
  const auto cols = std::stoll(require(kv, "latent_cols"));
  if (rows * cols > 0) {
    const auto lat = data::read_f32(dir / "latents.f32");
    if (static_cast<long long>(lat.size()) != rows * cols) throw ValidationError("latents.f32 has wrong length");
    ckpt.latent_candidates = Eigen::Map<const Matrix<float>>(lat.data(), rows, cols);
  }
  std::ifstream cfg(dir / "config.json");
  if (cfg) {
    try {
      cfg >> ckpt.config_echo;
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config.json in " + dir.string() + " is not valid JSON");
    }
  }
  return ckpt;
}

}  // namespace osb::algo
