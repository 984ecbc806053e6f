#pragma once

#include <stdexcept>

#include "osb/core/error.hpp"
#include "osb/env/env.hpp"

namespace osb::env {

// x' = A x + B u + w,  w ~ N(0, process_noise_std^2 I);  r = -(x'Qx + u'Ru).
struct LinQuadSpec {
  Mat A_dyn;
  Mat B_dyn;
  Mat Q_cost;
  Mat R_cost;
  double process_noise_std = 0.0;

  int state_dim() const { return static_cast<int>(A_dyn.rows()); }
  int action_dim() const { return static_cast<int>(B_dyn.cols()); }
  // Shapes, symmetry, Q >= 0 and R > 0.
  void validate() const;
};

struct LinQuadOptions {
  LinQuadSpec dynamics;
  double init_scale = 1.0;    // x0 ~ U[-init_scale, init_scale]^n; 0 pins x0 at the origin
  double action_bound = 5.0;  // symmetric box on every action dimension
  int max_episode_steps = 200;
  double gamma = 0.99;

  // Double integrator with dt = 0.1, unit state cost, action cost 0.1.
  static LinQuadOptions defaults();
};

class LinQuad final : public Env {
 public:
  explicit LinQuad(LinQuadOptions options);
  const LinQuadOptions& options() const { return options_; }
  // -K x with K from the discounted Riccati equation, clipped to the box.
  Policy expert_policy() const override;

 protected:
  Vec sample_initial_state(Rng& rng) override;
  double advance(Vec& state, const Vec& action, Rng& rng) override;

 private:
  LinQuadOptions options_;
  Mat gain_;
};

class RiccatiNonConvergence : public RuntimeFailure {
 public:
  RiccatiNonConvergence(double residual, int iterations);
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct LqrOptions {
  int max_iterations = 100000;
  // Stop once max|P - F(P)| <= tolerance * max(1, max|P|).
  double tolerance = 1e-13;
};

struct LqrSolution {
  Mat gain;   // K, action_dim x state_dim; optimal action u = -K x
  Mat value;  // P, cost-to-go matrix
  double residual = 0.0;
  int iterations = 0;
};

// One application of the discounted Riccati map
//   F(P) = Q + g A'PA - g^2 A'PB (R + g B'PB)^-1 B'PA.
Mat riccati_map(const LinQuadSpec& spec, double gamma, const Mat& value);
// K(P) = g (R + g B'PB)^-1 B'PA.
Mat riccati_gain(const LinQuadSpec& spec, double gamma, const Mat& value);

// Value iteration on F from P = Q. Throws RiccatiNonConvergence carrying the
// last residual if the cap is hit.
LqrSolution lqr_optimal_policy(const LinQuadSpec& spec, double gamma, LqrOptions options = {});

}  // namespace osb::env
