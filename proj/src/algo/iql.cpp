#include <cmath>

#include "nets.hpp"

namespace osb::algo::detail {
namespace {

class IqlLearner final : public Learner {
 public:
  IqlLearner(const AlgoConfig& config, const ProblemSpec& problem,
             const data::NormalizationStats& norm, std::uint64_t seed)
      : config_(config), problem_(problem), norm_(norm),
        actor_(actor_spec(config, problem), derive_seed(seed, "actor"), config.learning_rate),
        q1_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic1"),
            config.learning_rate),
        q2_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic2"),
            config.learning_rate),
        value_(critic_spec(config, problem.state_dim), derive_seed(seed, "value"), config.learning_rate),
        q1_target_(q1_.params), q2_target_(q2_.params) {}

  UpdateReport update(const Batch& batch) override {
    const auto& c = config_.iql;
    UpdateReport r;
    const Matrix<float> sa = hcat(batch.states, batch.actions);
    const Matrix<float> target_q =
        nn::forward(q1_.spec, q1_target_, sa).cwiseMin(nn::forward(q2_.spec, q2_target_, sa));
    const Matrix<float> next_v = value_(batch.next_states);

    // Value: expectile regression of V(s) toward min target Q(s, a).
    Matrix<float> advantage;
    {
      Tp t;
      auto bv = nn::bind(t, value_.params);
      Var v = nn::forward(t, value_.spec, bv, t.constant(batch.states));
      Var u = t.sub(t.constant(target_q), v);
      advantage = t.value(u);
      Matrix<float> w = advantage.unaryExpr([&](float x) {
        return static_cast<float>(x < 0.0f ? 1.0 - c.expectile : c.expectile);
      });
      Var loss = t.mean(t.mul(t.constant(std::move(w)), t.square(u)));
      t.backward(loss);
      value_.step(nn::collect_gradient(t, bv, value_.params));
      r.aux["value_loss"] = t.scalar(loss);
    }

    // Critics toward r + gamma * V(s').
    {
      Matrix<float> target = batch.rewards + (batch.not_done.array() * next_v.array()).matrix() *
                                                 static_cast<float>(config_.discount);
      // Reference averages the two critic losses.
      r.critic_loss = 0.5 * critic_step(q1_, q2_, sa, target);
      nn::polyak_update(q1_target_, q1_.params, config_.tau);
      nn::polyak_update(q2_target_, q2_.params, config_.tau);
    }

    // Actor: advantage-weighted regression onto dataset actions.
    {
      Matrix<float> weights = advantage.unaryExpr([&](float x) {
        return static_cast<float>(std::min(std::exp(c.beta * static_cast<double>(x)), c.weight_clip));
      });
      Tp t;
      auto ba = nn::bind(t, actor_.params);
      Var pi = nn::forward(t, actor_.spec, ba, t.constant(batch.states));
      Var per_row = t.row_sum(t.square(t.sub(pi, t.constant(batch.actions))));
      Var loss = t.mean(t.mul(t.constant(std::move(weights)), per_row));
      t.backward(loss);
      actor_.step(nn::collect_gradient(t, ba, actor_.params));
      r.actor_train_loss = t.scalar(loss);
      r.aux["bc_mse"] = t.scalar(t.mean(per_row)) / problem_.action_dim;
    }
    return r;
  }

  PolicyCheckpoint snapshot(std::int64_t index) const override {
    auto c = base_snapshot(AlgoId::iql, problem_, norm_, index, config_);
    c.networks.emplace("actor", actor_.snap());
    c.networks.emplace("critic1", q1_.snap());
    c.networks.emplace("critic2", q2_.snap());
    c.networks.emplace("value", value_.snap());
    return c;
  }

 private:
  AlgoConfig config_;
  ProblemSpec problem_;
  data::NormalizationStats norm_;
  Net actor_, q1_, q2_, value_;
  nn::Params<float> q1_target_, q2_target_;
};

}  // namespace

std::unique_ptr<Learner> make_iql(const AlgoConfig& config, const ProblemSpec& problem,
                                  const data::NormalizationStats& norm, std::uint64_t seed) {
  return std::make_unique<IqlLearner>(config, problem, norm, seed);
}

}  // namespace osb::algo::detail
