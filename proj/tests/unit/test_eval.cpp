#include <doctest.h>

#include <filesystem>
#include <random>

#include "../support/oracles.hpp"
#include "osb/core/error.hpp"
#include "osb/env/registry.hpp"
#include "osb/eval/metrics.hpp"

using namespace osb;
using namespace osb::eval;
namespace fs = std::filesystem;

namespace {

// Linear actor pi(s) = W s + b, W and b given, clipped to +-max_action.
algo::PolicyCheckpoint linear_policy(const nn::Matrix<float>& w, const Eigen::VectorXf& b, float max_action = 10.0f) {
  algo::PolicyCheckpoint c;
  c.algorithm = algo::AlgoId::bc;
  c.state_dim = static_cast<int>(w.rows());
  c.action_dim = static_cast<int>(w.cols());
  c.max_action = max_action;
  c.normalization = data::NormalizationStats::identity(c.state_dim);
  nn::MLPSpec spec{c.state_dim, c.action_dim, {}, nn::Activation::relu, nn::OutputTransform::identity, 1.0};
  auto p = nn::init_params<float>(spec, 0);
  p.tensor(0) = w;
  p.tensor(1) = b.transpose();
  c.networks.emplace("actor", algo::NetworkSnapshot{spec, p});
  return c;
}

data::TransitionDataset slice(const data::RowMatrixF& states, const data::RowMatrixF& actions) {
  data::TransitionDataset d;
  d.states = states;
  d.actions = actions;
  d.next_states = states;
  d.rewards = Eigen::VectorXf::Zero(states.rows());
  d.dones.assign(static_cast<std::size_t>(states.rows()), 0);
  return d;
}

MetricsRow row(std::int64_t idx, double val) {
  MetricsRow r;
  r.update_index = idx;
  r.val_mse = val;
  return r;
}

}  // namespace

TEST_CASE("discounted return") {
  env::Trajectory t;
  t.rewards = Eigen::VectorXf::Ones(3);
  CHECK(std::abs(discounted_return(t, 0.5) - 1.75) <= 1e-9);
  CHECK(std::abs(discounted_return(t, 1.0) - 3.0) <= 1e-9);
  t.rewards << 2.0f, 5.0f, 7.0f;
  CHECK(std::abs(discounted_return(t, 0.0) - 2.0) <= 1e-9);
  CHECK_THROWS_AS(discounted_return(t, 1.5), ValidationError);
}

TEST_CASE("normalized score anchor arithmetic") {
  ScoreAnchors a{-50.0, -10.0, 0, 0};
  CHECK(std::abs(normalized_score(-10.0, a) - 100.0) <= 1e-9);
  CHECK(std::abs(normalized_score(-50.0, a)) <= 1e-9);
  CHECK(std::abs(normalized_score(-30.0, a) - 50.0) <= 1e-9);
  CHECK_THROWS_AS(normalized_score(1.0, ScoreAnchors{3.0, 3.0, 0, 0}), ValidationError);
}

TEST_CASE("normalized score is affine-equivariant about the random anchor") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-100.0, 100.0), scale(0.01, 50.0);
  for (int i = 0; i < 200; ++i) {
    ScoreAnchors a{u(rng), u(rng), 0, 0};
    if (a.random_score == a.expert_score) continue;
    const double raw = u(rng), c = scale(rng);
    ScoreAnchors b{a.random_score, a.random_score + c * (a.expert_score - a.random_score), 0, 0};
    const double raw_b = a.random_score + c * (raw - a.random_score);
    CHECK(normalized_score(raw_b, b) == doctest::Approx(normalized_score(raw, a)).epsilon(1e-9));
  }
}

TEST_CASE("action MSE examples") {
  data::RowMatrixF s(1, 2), act(1, 2);
  s << 0.0f, 0.0f;
  act << 0.0f, 0.0f;
  Eigen::VectorXf b(2);
  b << 1.0f, 0.0f;
  CHECK(std::abs(action_mse(linear_policy(nn::Matrix<float>::Zero(2, 2), b), slice(s, act)) - 0.5) <= 1e-9);

  data::RowMatrixF s3(3, 1), a3(3, 1);
  s3 << 1.0f, -2.0f, 4.0f;
  a3.setConstant(2.0f);
  auto zero = linear_policy(nn::Matrix<float>::Zero(1, 1), Eigen::VectorXf::Zero(1));
  CHECK(std::abs(action_mse(zero, slice(s3, a3)) - 4.0) <= 1e-9);

  auto ident = linear_policy(nn::Matrix<float>::Identity(1, 1), Eigen::VectorXf::Zero(1));
  CHECK(action_mse(ident, slice(s3, s3)) == 0.0);
  CHECK_THROWS_AS(action_mse(ident, slice(data::RowMatrixF(0, 1), data::RowMatrixF(0, 1))), ValidationError);
  CHECK_THROWS_AS(action_mse(ident, slice(data::RowMatrixF::Zero(2, 2), data::RowMatrixF::Zero(2, 1))),
                  ValidationError);
}

TEST_CASE("action MSE does not depend on the evaluation batch size") {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  data::RowMatrixF s(1000, 3), a(1000, 2);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = normal(rng);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  nn::Matrix<float> w(3, 2);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  auto ckpt = linear_policy(w, Eigen::VectorXf::Zero(2));
  const auto d = slice(s, a);
  const double ref = action_mse(ckpt, d, 256);
  CHECK(action_mse(ckpt, d, 1) == doctest::Approx(ref).epsilon(1e-6));
  CHECK(action_mse(ckpt, d, 7) == doctest::Approx(ref).epsilon(1e-6));
  // Independent double-precision oracle.
  const Eigen::MatrixXd diff = s.cast<double>() * w.cast<double>() - a.cast<double>();
  CHECK(ref == doctest::Approx(diff.squaredNorm() / diff.size()).epsilon(1e-6));
}

TEST_CASE("overfit gap") {
  CHECK(overfit_gap(0.5, 2.0) == 1.5);
  CHECK(overfit_gap(0.7, 0.7) == 0.0);
}

TEST_CASE("rank correlation") {
  CHECK(std::abs(rank_correlation({1, 2, 3}, {10, 20, 30}) - 1.0) <= 1e-9);
  CHECK(std::abs(rank_correlation({1, 2, 3}, {3, 2, 1}) + 1.0) <= 1e-9);
  CHECK(std::abs(rank_correlation({1, 2, 3, 4}, {2, 1, 4, 3}) - 0.6) <= 1e-9);
  CHECK_THROWS_AS(rank_correlation({1, 1, 1}, {1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(rank_correlation({1, 2}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(rank_correlation({1, 2, 3}, {1, 2}), ValidationError);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> u(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 3 + trial % 12; ++i) {
      xs.push_back(u(rng));
      ys.push_back(u(rng));
    }
    const double oracle = testing::spearman(xs, ys);
    if (!std::isfinite(oracle)) continue;
    CHECK(std::abs(rank_correlation(xs, ys) - oracle) <= 1e-9);
  }
}

TEST_CASE("early stop selection") {
  CHECK(early_stop_select({row(0, 3), row(50, 1), row(100, 2)}) == 50);
  CHECK(early_stop_select({row(0, 3), row(50, 2), row(100, 1)}) == 100);
  CHECK(early_stop_select({row(0, 3), row(50, 1), row(100, 1)}) == 50);
  CHECK(early_stop_select({row(100, 1), row(0, 3), row(50, 1)}) == 50);
  CHECK_THROWS_AS(early_stop_select({}), ValidationError);
}

TEST_CASE("early stop selection is stable under permutation") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> v(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<MetricsRow> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(row(i * 10, v(rng)));
    const auto ref = early_stop_select(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    CHECK(early_stop_select(rows) == ref);
  }
}

TEST_CASE("metrics rows round-trip through CSV") {
  MetricsRow r;
  r.run_id = "bc-n500-s0-abc";
  r.algorithm = "bc";
  r.dataset_size = 500;
  r.seed = 2;
  r.update_index = 1000;
  r.train_mse = 0.1 + 0.2;
  r.val_mse = 1.0 / 3.0;
  r.online_return = -12.345678901234567;
  r.normalized_score = 87.5;
  auto back = parse_csv_line(to_csv_line(r));
  CHECK(back.run_id == r.run_id);
  CHECK(back.train_mse == r.train_mse);
  CHECK(back.val_mse == r.val_mse);
  CHECK(back.online_return == r.online_return);
  CHECK(back.normalized_score == r.normalized_score);
  r.online_return.reset();
  r.normalized_score.reset();
  back = parse_csv_line(to_csv_line(r));
  CHECK_FALSE(back.online_return.has_value());
  CHECK_FALSE(back.normalized_score.has_value());
  CHECK(to_csv_line(back) == to_csv_line(r));
  CHECK_THROWS_AS(parse_csv_line("a,b,c"), ValidationError);
}

TEST_CASE("online evaluation") {
  auto env = env::make_env("linquad-v0");
  const auto expert = env->expert_policy();
  const double r1 = evaluate_policy(*env, expert, 10, 3);
  CHECK(evaluate_policy(*env, expert, 10, 3) == r1);
  const double random = evaluate_policy(*env, env::uniform_random_policy(env->spec(), 1), 10, 3);
  CHECK(r1 > random);
  CHECK_THROWS_AS(evaluate_policy(*env, expert, 0, 3), ValidationError);

  // One episode equals the undiscounted return of the same seeded rollout.
  auto ckpt = linear_policy(nn::Matrix<float>::Constant(env->spec().state_dim, env->spec().action_dim, -0.3f),
                            Eigen::VectorXf::Zero(env->spec().action_dim), 1.0f);
  const double online = online_evaluate(ckpt, *env, 1, 8);
  auto traj = env::rollout(*env, checkpoint_policy(ckpt), env->spec().max_episode_steps, derive_seed(8, 0), 0.0);
  CHECK(online == doctest::Approx(discounted_return(traj, 1.0)).epsilon(1e-12));
}

namespace {

class ConstantRewardEnv : public env::Env {
 public:
  explicit ConstantRewardEnv(double c) : env::Env(make_spec()), c_(c) {}
  env::Policy expert_policy() const override {
    return [](const env::Vec&) { return env::Vec::Zero(1); };
  }

 protected:
  env::Vec sample_initial_state(Rng& rng) override {
    return env::Vec::Constant(1, std::normal_distribution<double>()(rng));
  }
  double advance(env::Vec& state, const env::Vec& action, Rng&) override {
    state += action;
    return c_;
  }

 private:
  static env::EnvSpec make_spec() {
    env::EnvSpec s;
    s.name = "constant";
    s.state_dim = 1;
    s.action_dim = 1;
    s.action_low = env::Vec::Constant(1, -1.0);
    s.action_high = env::Vec::Constant(1, 1.0);
    s.max_episode_steps = 37;
    return s;
  }
  double c_;
};

}  // namespace

TEST_CASE("constant reward c over horizon H returns c times H") {
  ConstantRewardEnv e(-1.5);
  auto ckpt = linear_policy(nn::Matrix<float>::Constant(1, 1, 0.5f), Eigen::VectorXf::Zero(1), 1.0f);
  CHECK(online_evaluate(ckpt, e, 10, 4) == doctest::Approx(-1.5 * 37));
  CHECK(online_evaluate(ckpt, e, 10, 4) == online_evaluate(ckpt, e, 10, 4));
}

TEST_CASE("anchors persist as JSON") {
  auto env = env::make_env("pendulum-v0", {{"max_episode_steps", 30}});
  auto a = measure_anchors(*env, 5, 11);
  CHECK(a.expert_score > a.random_score);
  CHECK(a.episodes == 5);
  const auto file = fs::temp_directory_path() / ("osb_anchors_" + std::to_string(::getpid()) + ".json");
  save_anchors(a, file);
  auto b = load_anchors(file);
  CHECK(b.random_score == a.random_score);
  CHECK(b.expert_score == a.expert_score);
  CHECK(b.seed == 11);
  fs::remove(file);
}
