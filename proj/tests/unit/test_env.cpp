#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "osb/core/error.hpp"
#include "osb/env/linquad.hpp"
#include "osb/env/registry.hpp"
#include "osb/env/toy_envs.hpp"
#include "osb/eval/metrics.hpp"

using namespace osb;
using namespace osb::env;

namespace {

LinQuadSpec scalar_spec(double a, double b, double q, double r) {
  LinQuadSpec s;
  s.A_dyn = Mat::Constant(1, 1, a);
  s.B_dyn = Mat::Constant(1, 1, b);
  s.Q_cost = Mat::Constant(1, 1, q);
  s.R_cost = Mat::Constant(1, 1, r);
  return s;
}

}  // namespace

TEST_CASE("reset is deterministic per seed") {
  for (const auto& name : registered_envs()) {
    auto e = make_env(name);
    const Vec a = e->reset(0);
    const Vec b = e->reset(0);
    CHECK(a == b);
  }
  auto p = make_env("pendulum-v0");
  CHECK(p->reset(0) != p->reset(1));
}

TEST_CASE("linquad with zero init scale starts at the origin") {
  auto e = make_env("linquad-v0", {{"init_scale", 0.0}});
  CHECK(e->reset(7).isZero(0.0));
}

TEST_CASE("stepping before reset is an error") {
  auto e = make_env("pointreacher-v0");
  CHECK_THROWS_AS(e->step(Vec::Zero(2)), RuntimeFailure);
}

TEST_CASE("point reacher at the goal with zero action stays put with zero reward") {
  PointReacher e;
  e.set_state(Vec::Zero(2), Vec::Zero(2));
  auto r = e.step(Vec::Zero(2));
  CHECK(r.next_state.isZero(0.0));
  CHECK(r.reward == 0.0);
}

TEST_CASE("linquad identity dynamics give x + u") {
  nlohmann::json opts = {{"A", {{1.0, 0.0}, {0.0, 1.0}}},
                         {"B", {{1.0, 0.0}, {0.0, 1.0}}},
                         {"R", {{1.0, 0.0}, {0.0, 1.0}}},
                         {"process_noise_std", 0.0}};
  auto e = make_env("linquad-v0", opts);
  const Vec x = e->reset(3);
  Vec u(2);
  u << 0.25, -0.5;
  auto r = e->step(u);
  CHECK((r.next_state - (x + u)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("out-of-box actions behave like clipped actions") {
  for (const auto& name : registered_envs()) {
    auto a = make_env(name);
    auto b = make_env(name);
    a->reset(11);
    b->reset(11);
    const auto& spec = a->spec();
    Vec big = Vec::Constant(spec.action_dim, 100.0);
    auto ra = a->step(big);
    auto rb = b->step(spec.action_high);
    CHECK(ra.next_state == rb.next_state);
    CHECK(ra.reward == rb.reward);
  }
}

TEST_CASE("done exactly at the time limit") {
  auto e = make_env("pointreacher-v0", {{"max_episode_steps", 5}});
  e->reset(0);
  for (int t = 0; t < 4; ++t) CHECK_FALSE(e->step(Vec::Zero(2)).done);
  CHECK(e->step(Vec::Zero(2)).done);
  CHECK_THROWS_AS(e->step(Vec::Zero(2)), RuntimeFailure);
}

TEST_CASE("rollout length, bounds and determinism") {
  for (const auto& name : registered_envs()) {
    auto e = make_env(name);
    auto t1 = rollout(*e, e->expert_policy(), 5, 9, 0.0);
    CHECK(t1.length() == 5);
    auto t2 = rollout(*e, e->expert_policy(), 5, 9, 0.0);
    CHECK(t1.states == t2.states);
    CHECK(t1.actions == t2.actions);
    auto noisy = rollout(*e, uniform_random_policy(e->spec(), 1), 200, 4, 5.0);
    const auto& spec = e->spec();
    for (Eigen::Index i = 0; i < noisy.length(); ++i) {
      for (int j = 0; j < spec.action_dim; ++j) {
        CHECK(noisy.actions(i, j) >= static_cast<float>(spec.action_low[j]));
        CHECK(noisy.actions(i, j) <= static_cast<float>(spec.action_high[j]));
      }
    }
    CHECK(noisy.length() == spec.max_episode_steps);
  }
}

TEST_CASE("unknown env names list the registry") {
  try {
    make_env("mujoco-v9");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("pointreacher-v0") != std::string::npos);
  }
  CHECK_THROWS_AS(make_env("pointreacher-v0", {{"bogus", 1}}), ValidationError);
}

TEST_CASE("EnvSpec invariants") {
  EnvSpec s;
  s.name = "x";
  s.state_dim = 1;
  s.action_dim = 1;
  s.action_low = Vec::Constant(1, 1.0);
  s.action_high = Vec::Constant(1, -1.0);
  s.gamma = 1.5;
  s.max_episode_steps = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("scalar Riccati: cost-free uncontrolled case gives K = 0") {
  auto sol = lqr_optimal_policy(scalar_spec(0.0, 1.0, 1.0, 1.0), 1.0);
  CHECK(sol.gain(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.value(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scalar Riccati matches the independent recursion") {
  struct Case {
    double a, b, q, r, g;
  };
  for (Case c : {Case{1, 1, 1, 1, 1}, Case{0.9, 0.5, 2, 0.3, 0.99}, Case{1.2, 1, 1, 1, 0.95},
                 Case{0.5, 2, 0.1, 1, 1}}) {
    const double p = testing::scalar_riccati(c.a, c.b, c.q, c.r, c.g);
    const double k = testing::scalar_gain(c.a, c.b, c.r, c.g, p);
    auto sol = lqr_optimal_policy(scalar_spec(c.a, c.b, c.q, c.r), c.g);
    CHECK(std::abs(sol.value(0, 0) - p) <= 1e-10);
    CHECK(std::abs(sol.gain(0, 0) - k) <= 1e-10);
  }
  // a = b = q = r = 1: p^2 = p + 1, the golden ratio.
  auto sol = lqr_optimal_policy(scalar_spec(1, 1, 1, 1), 1.0);
  CHECK(std::abs(sol.value(0, 0) - std::numbers::phi) <= 1e-10);
}

TEST_CASE("diagonal system decouples into scalar problems") {
  LinQuadSpec s;
  s.A_dyn = Eigen::Vector2d(1.0, 0.9).asDiagonal();
  s.B_dyn = Eigen::Vector2d(1.0, 0.5).asDiagonal();
  s.Q_cost = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  s.R_cost = Eigen::Vector2d(1.0, 0.3).asDiagonal();
  const double g = 0.99;
  auto sol = lqr_optimal_policy(s, g);
  const double p0 = testing::scalar_riccati(1.0, 1.0, 1.0, 1.0, g);
  const double p1 = testing::scalar_riccati(0.9, 0.5, 2.0, 0.3, g);
  CHECK(std::abs(sol.gain(0, 0) - testing::scalar_gain(1.0, 1.0, 1.0, g, p0)) <= 1e-10);
  CHECK(std::abs(sol.gain(1, 1) - testing::scalar_gain(0.9, 0.5, 0.3, g, p1)) <= 1e-10);
  CHECK(std::abs(sol.gain(0, 1)) <= 1e-12);
  CHECK(std::abs(sol.gain(1, 0)) <= 1e-12);
}

TEST_CASE("Riccati fixed-point residual on the default double integrator") {
  const auto o = LinQuadOptions::defaults();
  auto sol = lqr_optimal_policy(o.dynamics, o.gamma);
  const Mat f = riccati_map(o.dynamics, o.gamma, sol.value);
  CHECK((f - sol.value).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("Riccati iteration cap raises with the last residual") {
  LqrOptions opts;
  opts.max_iterations = 2;
  try {
    lqr_optimal_policy(LinQuadOptions::defaults().dynamics, 0.99, opts);
    FAIL("expected non-convergence");
  } catch (const RiccatiNonConvergence& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("LQR expert beats the zero policy and random linear gains") {
  nlohmann::json opts = {{"process_noise_std", 0.0}};
  auto e = make_env("linquad-v0", opts);
  const double gamma = e->spec().gamma;
  Rng rng(5);
  std::normal_distribution<double> gain(0.0, 3.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const double expert = eval::discounted_return(rollout(*e, e->expert_policy(), 200, s, 0.0), gamma);
    Policy zero = [](const Vec&) { return Vec::Zero(1); };
    const double z = eval::discounted_return(rollout(*e, zero, 200, s, 0.0), gamma);
    CHECK(expert >= z);
    for (int k = 0; k < 100; ++k) {
      Mat K(1, 2);
      K << gain(rng), gain(rng);
      Policy lin = [K](const Vec& x) { return Vec(-K * x); };
      CHECK(expert >= eval::discounted_return(rollout(*e, lin, 200, s, 0.0), gamma) - 1e-9);
    }
  }
}

TEST_CASE("linquad validation rejects indefinite R") {
  LinQuadSpec s = scalar_spec(1, 1, 1, -1);
  CHECK_THROWS_AS(s.validate(), ValidationError);
}
