#include "nets.hpp"
#include "osb/algo/losses.hpp"

namespace osb::algo::detail {
namespace {

class Td3bcLearner final : public Learner {
 public:
  Td3bcLearner(const AlgoConfig& config, const ProblemSpec& problem,
               const data::NormalizationStats& norm, std::uint64_t seed)
      : config_(config), problem_(problem), norm_(norm),
        actor_(actor_spec(config, problem), derive_seed(seed, "actor"), config.learning_rate),
        q1_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic1"),
            config.learning_rate),
        q2_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic2"),
            config.learning_rate),
        actor_target_(actor_.params), q1_target_(q1_.params), q2_target_(q2_.params),
        noise_rng_(derive_seed(seed, "target-noise")) {}

  UpdateReport update(const Batch& batch) override {
    const auto& c = config_.td3bc;
    const float max_a = problem_.max_action;
    const auto n = batch.size();

    // Target policy smoothing.
    Matrix<float> noise = clip(gaussian(noise_rng_, n, problem_.action_dim, c.policy_noise * max_a),
                               static_cast<float>(c.noise_clip * max_a));
    Matrix<float> next_action =
        clip(nn::forward(actor_.spec, actor_target_, batch.next_states) + noise, max_a);
    Matrix<float> next_in = hcat(batch.next_states, next_action);
    Matrix<float> tq = nn::forward(q1_.spec, q1_target_, next_in)
                           .cwiseMin(nn::forward(q2_.spec, q2_target_, next_in));
    Matrix<float> target = batch.rewards + (batch.not_done.array() * tq.array()).matrix() *
                                               static_cast<float>(config_.discount);
    UpdateReport r;
    r.critic_loss = critic_step(q1_, q2_, hcat(batch.states, batch.actions), target);

    if (updates_ % c.policy_delay == 0) {
      Tp t;
      auto ba = nn::bind(t, actor_.params);
      auto bq = nn::bind(t, q1_.params, false);
      Var s = t.constant(batch.states);
      Var pi = nn::forward(t, actor_.spec, ba, s);
      Var q = nn::forward(t, q1_.spec, bq, t.concat_cols(s, pi));
      const Eigen::VectorXf qv = t.value(q).col(0);
      const double lambda = td3bc_lambda(c.alpha, qv);
      Var bc = mse(t, pi, t.constant(batch.actions));
      Var loss = t.add(t.scale(t.mean(q), static_cast<float>(-lambda)), bc);
      t.backward(loss);
      actor_.step(nn::collect_gradient(t, ba, actor_.params));
      last_actor_loss_ = t.scalar(loss);
      last_bc_ = t.scalar(bc);
      last_lambda_ = lambda;

      nn::polyak_update(q1_target_, q1_.params, config_.tau);
      nn::polyak_update(q2_target_, q2_.params, config_.tau);
      nn::polyak_update(actor_target_, actor_.params, config_.tau);
    }
    ++updates_;
    r.actor_train_loss = last_actor_loss_;
    r.aux["bc_mse"] = last_bc_;
    r.aux["lambda"] = last_lambda_;
    return r;
  }

  PolicyCheckpoint snapshot(std::int64_t index) const override {
    auto c = base_snapshot(AlgoId::td3bc, problem_, norm_, index, config_);
    c.networks.emplace("actor", actor_.snap());
    c.networks.emplace("critic1", q1_.snap());
    c.networks.emplace("critic2", q2_.snap());
    return c;
  }

 private:
  AlgoConfig config_;
  ProblemSpec problem_;
  data::NormalizationStats norm_;
  Net actor_, q1_, q2_;
  nn::Params<float> actor_target_, q1_target_, q2_target_;
  Rng noise_rng_;
  std::int64_t updates_ = 0;
  double last_actor_loss_ = 0.0, last_bc_ = 0.0, last_lambda_ = 0.0;
};

}  // namespace

std::unique_ptr<Learner> make_td3bc(const AlgoConfig& config, const ProblemSpec& problem,
                                    const data::NormalizationStats& norm, std::uint64_t seed) {
  return std::make_unique<Td3bcLearner>(config, problem, norm, seed);
}

}  // namespace osb::algo::detail
