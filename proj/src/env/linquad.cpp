#include "osb/env/linquad.hpp"

#include <sstream>

namespace osb::env {

void LinQuadSpec::validate() const {
  std::ostringstream problems;
  const auto n = A_dyn.rows();
  if (n < 1 || A_dyn.cols() != n) problems << "A_dyn must be square and non-empty; ";
  if (B_dyn.rows() != n || B_dyn.cols() < 1) problems << "B_dyn must be state_dim x action_dim; ";
  if (Q_cost.rows() != n || Q_cost.cols() != n) problems << "Q_cost must be state_dim x state_dim; ";
  const auto m = B_dyn.cols();
  if (R_cost.rows() != m || R_cost.cols() != m) problems << "R_cost must be action_dim x action_dim; ";
  if (process_noise_std < 0.0) problems << "process_noise_std must be >= 0; ";
  if (problems.str().empty()) {
    if (!Q_cost.isApprox(Q_cost.transpose(), 1e-12)) problems << "Q_cost must be symmetric; ";
    if (!R_cost.isApprox(R_cost.transpose(), 1e-12)) problems << "R_cost must be symmetric; ";
    Eigen::SelfAdjointEigenSolver<Mat> q(Q_cost), r(R_cost);
    if (q.eigenvalues().minCoeff() < -1e-12) problems << "Q_cost must be positive semidefinite; ";
    if (r.eigenvalues().minCoeff() <= 0.0) problems << "R_cost must be positive definite; ";
  }
  if (!problems.str().empty()) throw ValidationError("invalid LinQuadSpec: " + problems.str());
}

LinQuadOptions LinQuadOptions::defaults() {
  LinQuadOptions o;
  o.dynamics.A_dyn.resize(2, 2);
  o.dynamics.A_dyn << 1.0, 0.1, 0.0, 1.0;
  o.dynamics.B_dyn.resize(2, 1);
  o.dynamics.B_dyn << 0.005, 0.1;
  o.dynamics.Q_cost = Mat::Identity(2, 2);
  o.dynamics.R_cost = Mat::Constant(1, 1, 0.1);
  o.dynamics.process_noise_std = 0.01;
  return o;
}

namespace {

EnvSpec linquad_spec(const LinQuadOptions& o) {
  o.dynamics.validate();
  EnvSpec spec;
  spec.name = "linquad-v0";
  spec.state_dim = o.dynamics.state_dim();
  spec.action_dim = o.dynamics.action_dim();
  spec.action_low = Vec::Constant(spec.action_dim, -o.action_bound);
  spec.action_high = Vec::Constant(spec.action_dim, o.action_bound);
  spec.max_episode_steps = o.max_episode_steps;
  spec.gamma = o.gamma;
  return spec;
}

}  // namespace

LinQuad::LinQuad(LinQuadOptions options)
    : Env(linquad_spec(options)),
      options_(std::move(options)),
      gain_(lqr_optimal_policy(options_.dynamics, options_.gamma).gain) {}

Vec LinQuad::sample_initial_state(Rng& rng) {
  const int n = options_.dynamics.state_dim();
  if (options_.init_scale == 0.0) return Vec::Zero(n);
  std::uniform_real_distribution<double> box(-options_.init_scale, options_.init_scale);
  Vec s(n);
  for (int i = 0; i < n; ++i) s[i] = box(rng);
  return s;
}

double LinQuad::advance(Vec& state, const Vec& action, Rng& rng) {
  const auto& d = options_.dynamics;
  const double reward = -(state.dot(d.Q_cost * state) + action.dot(d.R_cost * action));
  Vec next = d.A_dyn * state + d.B_dyn * action;
  if (d.process_noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, d.process_noise_std);
    for (Eigen::Index i = 0; i < next.size(); ++i) next[i] += normal(rng);
  }
  state = std::move(next);
  return reward;
}

Policy LinQuad::expert_policy() const {
  Mat gain = gain_;
  const double bound = options_.action_bound;
  return [gain, bound](const Vec& s) -> Vec {
    return (-(gain * s)).cwiseMax(-bound).cwiseMin(bound);
  };
}

RiccatiNonConvergence::RiccatiNonConvergence(double residual, int iterations)
    : RuntimeFailure("Riccati iteration did not converge after " + std::to_string(iterations) +
                     " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

Mat riccati_gain(const LinQuadSpec& spec, double gamma, const Mat& value) {
  const Mat& A = spec.A_dyn;
  const Mat& B = spec.B_dyn;
  const Mat inner = spec.R_cost + gamma * B.transpose() * value * B;
  return gamma * inner.ldlt().solve(B.transpose() * value * A);
}

Mat riccati_map(const LinQuadSpec& spec, double gamma, const Mat& value) {
  const Mat& A = spec.A_dyn;
  const Mat& B = spec.B_dyn;
  const Mat inner = spec.R_cost + gamma * B.transpose() * value * B;
  const Mat bpa = B.transpose() * value * A;
  Mat next = spec.Q_cost + gamma * A.transpose() * value * A -
             gamma * gamma * bpa.transpose() * inner.ldlt().solve(bpa);
  return 0.5 * (next + next.transpose());
}

LqrSolution lqr_optimal_policy(const LinQuadSpec& spec, double gamma, LqrOptions options) {
  spec.validate();
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
  Mat value = spec.Q_cost;
  double residual = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    Mat next = riccati_map(spec, gamma, value);
    residual = (next - value).cwiseAbs().maxCoeff();
    value = std::move(next);
    if (!std::isfinite(residual)) break;
    if (residual <= options.tolerance * std::max(1.0, value.cwiseAbs().maxCoeff())) {
      LqrSolution sol;
      sol.value = value;
      sol.gain = riccati_gain(spec, gamma, value);
      sol.residual = (riccati_map(spec, gamma, value) - value).cwiseAbs().maxCoeff();
      sol.iterations = it;
      return sol;
    }
  }
  throw RiccatiNonConvergence(residual, options.max_iterations);
}

}  // namespace osb::env
