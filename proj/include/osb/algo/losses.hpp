#pragma once

#include <Eigen/Dense>

namespace osb::algo {

// r + (1 - done) * gamma * next_value
double td_target(double reward, bool done, double gamma, double next_value);

// alpha / mean|Q| over the batch (denominator floored at 1e-6).
double td3bc_lambda(double alpha, const Eigen::VectorXf& q_values);

// |tau - 1(u < 0)| * u^2
double expectile_loss(double u, double expectile);

// min(exp(beta * advantage), clip)
double awr_weight(double advantage, double beta, double clip);

// a + clamp(xi, -phi * max_action, phi * max_action), then clipped to the box.
Eigen::VectorXf apply_perturbation(const Eigen::VectorXf& action, const Eigen::VectorXf& xi,
                                   double phi, double max_action);

// lambda * min(q1, q2) + (1 - lambda) * max(q1, q2)
double soft_clipped_double_q(double q1, double q2, double lambda_min);

inline constexpr double kDiscriminatorClamp = 1e-6;

// -log(1 - D) with D clamped to [kDiscriminatorClamp, 1 - kDiscriminatorClamp].
double dac_reward(double discriminator_prob);

// Mean binary cross-entropy: expert rows labelled 1, policy rows labelled 0.
double discriminator_loss(const Eigen::VectorXd& expert_probs, const Eigen::VectorXd& policy_probs);

}  // namespace osb::algo
