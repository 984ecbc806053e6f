#include "osb/algo/losses.hpp"

#include <algorithm>
#include <cmath>

namespace osb::algo {

double td_target(double reward, bool done, double gamma, double next_value) {
  return done ? reward : reward + gamma * next_value;
}

double td3bc_lambda(double alpha, const Eigen::VectorXf& q_values) {
  const double mean_abs = q_values.cast<double>().cwiseAbs().mean();
  return alpha / std::max(mean_abs, 1e-6);
}

double expectile_loss(double u, double expectile) {
  const double weight = u < 0.0 ? 1.0 - expectile : expectile;
  return weight * u * u;
}

double awr_weight(double advantage, double beta, double clip) {
  return std::min(std::exp(beta * advantage), clip);
}

Eigen::VectorXf apply_perturbation(const Eigen::VectorXf& action, const Eigen::VectorXf& xi,
                                   double phi, double max_action) {
  const float limit = static_cast<float>(phi * max_action);
  const float bound = static_cast<float>(max_action);
  return (action + xi.cwiseMax(-limit).cwiseMin(limit)).cwiseMax(-bound).cwiseMin(bound);
}

double soft_clipped_double_q(double q1, double q2, double lambda_min) {
  return lambda_min * std::min(q1, q2) + (1.0 - lambda_min) * std::max(q1, q2);
}

double dac_reward(double discriminator_prob) {
  const double d = std::clamp(discriminator_prob, kDiscriminatorClamp, 1.0 - kDiscriminatorClamp);
  return -std::log(1.0 - d);
}

double discriminator_loss(const Eigen::VectorXd& expert_probs, const Eigen::VectorXd& policy_probs) {
  const double expert = -expert_probs.array().log().mean();
  const double policy = -(1.0 - policy_probs.array()).log().mean();
  return expert + policy;
}

}  // namespace osb::algo
