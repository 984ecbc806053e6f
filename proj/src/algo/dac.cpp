#include <cmath>

#include "nets.hpp"
#include "osb/algo/losses.hpp"
#include "osb/core/error.hpp"
#include "osb/env/registry.hpp"

namespace osb::algo::detail {
namespace {

// Online adversarial imitation: TD3 on the reward -log(1 - D(s, a)), where D
// separates expert transitions from the agent's own replay.
class DacLearner final : public Learner {
 public:
  DacLearner(const AlgoConfig& config, const ProblemSpec& problem,
             const data::NormalizationStats& norm, std::uint64_t seed)
      : config_(config), problem_(problem), norm_(norm),
        actor_(actor_spec(config, problem), derive_seed(seed, "actor"), config.learning_rate),
        q1_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic1"),
            config.learning_rate),
        q2_(critic_spec(config, problem.state_dim + problem.action_dim), derive_seed(seed, "critic2"),
            config.learning_rate),
        disc_(critic_spec(config, problem.state_dim + problem.action_dim),
              derive_seed(seed, "discriminator"), config.dac.discriminator_lr),
        actor_target_(actor_.params), q1_target_(q1_.params), q2_target_(q2_.params),
        rng_(derive_seed(seed, "dac")), episode_seed_(derive_seed(seed, "dac-episodes")) {
    if (problem.env_name.empty()) throw ValidationError("dac needs an environment name");
    env_ = env::make_env(problem.env_name, problem.env_options);
    if (env_->spec().state_dim != problem.state_dim || env_->spec().action_dim != problem.action_dim) {
      throw ValidationError("dac environment dims do not match the dataset");
    }
    const auto cap = static_cast<Eigen::Index>(config.dac.replay_capacity);
    replay_.states.resize(cap, problem.state_dim);
    replay_.actions.resize(cap, problem.action_dim);
    replay_.next_states.resize(cap, problem.state_dim);
    replay_.rewards = Eigen::VectorXf::Zero(cap);
    replay_.dones.assign(static_cast<std::size_t>(cap), 0);
    state_ = env_->reset(derive_seed(episode_seed_, episodes_++));
  }

  UpdateReport update(const Batch& expert) override {
    const auto& c = config_.dac;
    const float max_a = problem_.max_action;
    collect_step();

    UpdateReport r;
    const auto n = expert.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, replay_size_ - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& i : rows) i = pick(rng_);
    Batch policy = BatchSampler::gather_from(replay_, rows);

    // Discriminator with a gradient penalty on expert/policy interpolates.
    {
      const Matrix<float> xe = hcat(expert.states, expert.actions);
      const Matrix<float> xp = hcat(policy.states, policy.actions);
      std::uniform_real_distribution<float> unit(0.0f, 1.0f);
      Matrix<float> mix(n, xe.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        const float e = unit(rng_);
        mix.row(i) = e * xe.row(i) + (1.0f - e) * xp.row(i);
      }
      Tp t;
      auto bd = nn::bind(t, disc_.params);
      Var le = nn::forward(t, disc_.spec, bd, t.constant(xe));
      Var lp = nn::forward(t, disc_.spec, bd, t.constant(xp));
      // -log D(expert) - log(1 - D(policy)), via softplus on logits.
      Var bce = t.add(t.mean(t.softplus(t.scale(le, -1.0f))), t.mean(t.softplus(lp)));
      Var g = nn::input_gradient(t, disc_.spec, bd, t.constant(std::move(mix)));
      Var norm = t.sqrt(t.add_scalar(t.row_sum(t.square(g)), 1e-12f));
      Var gp = t.mean(t.square(t.add_scalar(norm, -1.0f)));
      Var loss = t.add(bce, t.scale(gp, static_cast<float>(c.gradient_penalty)));
      t.backward(loss);
      disc_.step(nn::collect_gradient(t, bd, disc_.params));
      r.aux["discriminator_loss"] = t.scalar(bce);
      r.aux["gradient_penalty"] = t.scalar(gp);
    }

    // Learned reward on the replay batch.
    Matrix<float> logits = disc_(hcat(policy.states, policy.actions));
    Matrix<float> reward(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      reward(i, 0) = static_cast<float>(dac_reward(1.0 / (1.0 + std::exp(-static_cast<double>(logits(i, 0))))));
    }
    r.aux["mean_reward"] = reward.mean();

    Matrix<float> noise = clip(gaussian(rng_, n, problem_.action_dim, c.policy_noise * max_a),
                               static_cast<float>(c.noise_clip * max_a));
    Matrix<float> next_action =
        clip(nn::forward(actor_.spec, actor_target_, policy.next_states) + noise, max_a);
    Matrix<float> next_in = hcat(policy.next_states, next_action);
    Matrix<float> tq = nn::forward(q1_.spec, q1_target_, next_in)
                           .cwiseMin(nn::forward(q2_.spec, q2_target_, next_in));
    Matrix<float> target = reward + (policy.not_done.array() * tq.array()).matrix() *
                                        static_cast<float>(config_.discount);
    r.critic_loss = critic_step(q1_, q2_, hcat(policy.states, policy.actions), target);

    if (updates_ % c.policy_delay == 0) {
      Tp t;
      auto ba = nn::bind(t, actor_.params);
      auto bq = nn::bind(t, q1_.params, false);
      Var s = t.constant(policy.states);
      Var pi = nn::forward(t, actor_.spec, ba, s);
      Var loss = t.scale(t.mean(nn::forward(t, q1_.spec, bq, t.concat_cols(s, pi))), -1.0f);
      t.backward(loss);
      actor_.step(nn::collect_gradient(t, ba, actor_.params));
      last_actor_loss_ = t.scalar(loss);
      nn::polyak_update(q1_target_, q1_.params, config_.tau);
      nn::polyak_update(q2_target_, q2_.params, config_.tau);
      nn::polyak_update(actor_target_, actor_.params, config_.tau);
    }
    ++updates_;
    r.actor_train_loss = last_actor_loss_;
    return r;
  }

  PolicyCheckpoint snapshot(std::int64_t index) const override {
    auto c = base_snapshot(AlgoId::dac, problem_, norm_, index, config_);
    c.networks.emplace("actor", actor_.snap());
    c.networks.emplace("critic1", q1_.snap());
    c.networks.emplace("critic2", q2_.snap());
    c.networks.emplace("discriminator", disc_.snap());
    return c;
  }

  std::uint64_t env_steps() const override { return env_->step_count(); }

 private:
  void collect_step() {
    const auto& c = config_.dac;
    if (c.max_env_steps > 0 && env_->step_count() >= static_cast<std::uint64_t>(c.max_env_steps)) {
      throw RuntimeFailure("dac exhausted its budget of " + std::to_string(c.max_env_steps) +
                           " environment steps");
    }
    const auto& spec = env_->spec();
    Eigen::VectorXd action(spec.action_dim);
    if (env_->step_count() < static_cast<std::uint64_t>(c.start_steps)) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] = u(rng_) * problem_.max_action;
    } else {
      Matrix<float> s = state_.cast<float>().transpose();
      Matrix<float> a = actor_(s);
      std::normal_distribution<double> normal(0.0, c.exploration_noise * problem_.max_action);
      for (Eigen::Index i = 0; i < action.size(); ++i) action[i] = a(0, i) + normal(rng_);
    }
    action = env_->clip_action(action);
    env::StepResult step = env_->step(action);
    const Eigen::Index at = replay_next_;
    replay_.states.row(at) = state_.cast<float>().transpose();
    replay_.actions.row(at) = action.cast<float>().transpose();
    replay_.next_states.row(at) = step.next_state.cast<float>().transpose();
    replay_next_ = (replay_next_ + 1) % replay_.states.rows();
    replay_size_ = std::min<Eigen::Index>(replay_size_ + 1, replay_.states.rows());
    state_ = step.done ? env_->reset(derive_seed(episode_seed_, episodes_++)) : step.next_state;
  }

  AlgoConfig config_;
  ProblemSpec problem_;
  data::NormalizationStats norm_;
  Net actor_, q1_, q2_, disc_;
  nn::Params<float> actor_target_, q1_target_, q2_target_;
  Rng rng_;
  std::uint64_t episode_seed_;
  std::uint64_t episodes_ = 0;
  std::unique_ptr<env::Env> env_;
  env::Vec state_;
  data::TransitionDataset replay_;
  Eigen::Index replay_next_ = 0;
  Eigen::Index replay_size_ = 0;
  std::int64_t updates_ = 0;
  double last_actor_loss_ = 0.0;
};

}  // namespace

std::unique_ptr<Learner> make_dac(const AlgoConfig& config, const ProblemSpec& problem,
                                  const data::NormalizationStats& norm,
                                  const data::TransitionDataset& /*expert*/, std::uint64_t seed) {
  return std::make_unique<DacLearner>(config, problem, norm, seed);
}

}  // namespace osb::algo::detail
