#include "nets.hpp"

namespace osb::algo::detail {
namespace {

constexpr float kLogStdMin = -4.0f;
constexpr float kLogStdMax = 15.0f;
constexpr float kLatentClip = 0.5f;

class BcqLearner final : public Learner {
 public:
  BcqLearner(const AlgoConfig& config, const ProblemSpec& problem,
             const data::NormalizationStats& norm, std::uint64_t seed)
      : config_(config), problem_(problem), norm_(norm),
        latent_(config.bcq.latent_dim > 0 ? config.bcq.latent_dim : 2 * problem.action_dim),
        rng_(derive_seed(seed, "bcq-sampling")) {
    const int s = problem.state_dim, a = problem.action_dim;
    const double lr = config.learning_rate;
    // The perturbation net maps (s, a) to xi in [-phi * max_action, phi * max_action].
    actor_ = Net(make_spec(s + a, a, config.actor_hidden.value_or(config.hidden), config.activation,
                           nn::OutputTransform::tanh_scaled, config.bcq.phi * problem.max_action),
                 derive_seed(seed, "actor"), lr);
    q1_ = Net(critic_spec(config, s + a), derive_seed(seed, "critic1"), lr);
    q2_ = Net(critic_spec(config, s + a), derive_seed(seed, "critic2"), lr);
    encoder_ = Net(make_spec(s + a, 2 * latent_, config.hidden, config.activation),
                   derive_seed(seed, "vae-encoder"), lr);
    decoder_ = Net(make_spec(s + latent_, a, config.hidden, config.activation,
                             nn::OutputTransform::tanh_scaled, problem.max_action),
                   derive_seed(seed, "vae-decoder"), lr);
    actor_target_ = actor_.params;
    q1_target_ = q1_.params;
    q2_target_ = q2_.params;
    Rng cand_rng(derive_seed(seed, "bcq-candidates"));
    candidates_ = sample_latent(cand_rng, config.bcq.n_candidates);
  }

  UpdateReport update(const Batch& batch) override {
    UpdateReport r;
    const auto n = batch.size();
    const float max_a = problem_.max_action;
    const float limit = static_cast<float>(config_.bcq.phi) * max_a;

    // VAE: reconstruction + KL to a unit Gaussian.
    {
      Tp t;
      auto be = nn::bind(t, encoder_.params);
      auto bd = nn::bind(t, decoder_.params);
      Var s = t.constant(batch.states);
      Var a = t.constant(batch.actions);
      Var h = nn::forward(t, encoder_.spec, be, t.concat_cols(s, a));
      Var mean = t.slice_cols(h, 0, latent_);
      Var log_std = t.clamp(t.slice_cols(h, latent_, latent_), kLogStdMin, kLogStdMax);
      Var stddev = t.exp(log_std);
      Var z = t.add(mean, t.mul(stddev, t.constant(gaussian(rng_, n, latent_, 1.0))));
      Var recon = nn::forward(t, decoder_.spec, bd, t.concat_cols(s, z));
      Var recon_loss = mse(t, recon, a);
      // -0.5 * mean(1 + log(std^2) - mean^2 - std^2)
      Var inner = t.sub(t.sub(t.add_scalar(t.scale(log_std, 2.0f), 1.0f), t.square(mean)),
                        t.square(stddev));
      Var kl = t.scale(t.mean(inner), -0.5f);
      Var loss = t.add(recon_loss, t.scale(kl, static_cast<float>(config_.bcq.kl_weight)));
      t.backward(loss);
      encoder_.step(nn::collect_gradient(t, be, encoder_.params));
      decoder_.step(nn::collect_gradient(t, bd, decoder_.params));
      r.aux["vae_loss"] = t.scalar(loss);
      r.aux["vae_recon"] = t.scalar(recon_loss);
    }

    // Critic: soft clipped double Q over n_candidates sampled next actions.
    {
      const int k = config_.bcq.n_candidates;
      Matrix<float> rep(n * k, problem_.state_dim);
      for (Eigen::Index i = 0; i < n; ++i) rep.middleRows(i * k, k) = batch.next_states.row(i).replicate(k, 1);
      Matrix<float> decoded = decoder_(hcat(rep, sample_latent(rng_, n * k)));
      Matrix<float> xi = nn::forward(actor_.spec, actor_target_, hcat(rep, decoded));
      Matrix<float> next_a = clip(decoded + clip(xi, limit), max_a);
      Matrix<float> in = hcat(rep, next_a);
      Matrix<float> tq1 = nn::forward(q1_.spec, q1_target_, in);
      Matrix<float> tq2 = nn::forward(q2_.spec, q2_target_, in);
      const float lam = static_cast<float>(config_.bcq.lambda_min);
      Matrix<float> soft = (lam * tq1.cwiseMin(tq2) + (1.0f - lam) * tq1.cwiseMax(tq2));
      Matrix<float> best(n, 1);
      for (Eigen::Index i = 0; i < n; ++i) best(i, 0) = soft.col(0).segment(i * k, k).maxCoeff();
      Matrix<float> target = batch.rewards + (batch.not_done.array() * best.array()).matrix() *
                                                 static_cast<float>(config_.discount);
      r.critic_loss = critic_step(q1_, q2_, hcat(batch.states, batch.actions), target);
    }

    // Perturbation net: maximize Q1 of perturbed decoded actions.
    {
      Matrix<float> decoded = decoder_(hcat(batch.states, sample_latent(rng_, n)));
      Tp t;
      auto ba = nn::bind(t, actor_.params);
      auto bq = nn::bind(t, q1_.params, false);
      Var s = t.constant(batch.states);
      Var d = t.constant(decoded);
      Var xi = nn::forward(t, actor_.spec, ba, t.concat_cols(s, d));
      Var act = t.clamp(t.add(d, xi), -max_a, max_a);
      Var q = nn::forward(t, q1_.spec, bq, t.concat_cols(s, act));
      Var loss = t.scale(t.mean(q), -1.0f);
      t.backward(loss);
      actor_.step(nn::collect_gradient(t, ba, actor_.params));
      r.actor_train_loss = t.scalar(loss);
    }

    nn::polyak_update(q1_target_, q1_.params, config_.tau);
    nn::polyak_update(q2_target_, q2_.params, config_.tau);
    nn::polyak_update(actor_target_, actor_.params, config_.tau);
    return r;
  }

  PolicyCheckpoint snapshot(std::int64_t index) const override {
    auto c = base_snapshot(AlgoId::bcq, problem_, norm_, index, config_);
    c.networks.emplace("actor", actor_.snap());
    c.networks.emplace("critic1", q1_.snap());
    c.networks.emplace("critic2", q2_.snap());
    c.networks.emplace("vae_encoder", encoder_.snap());
    c.networks.emplace("vae_decoder", decoder_.snap());
    c.phi = config_.bcq.phi;
    c.latent_candidates = candidates_;
    return c;
  }

 private:
  // Latent codes for decoding without an encoder: N(0, 1) clipped to +-0.5.
  Matrix<float> sample_latent(Rng& rng, Eigen::Index rows) const {
    return clip(gaussian(rng, rows, latent_, 1.0), kLatentClip);
  }

  AlgoConfig config_;
  ProblemSpec problem_;
  data::NormalizationStats norm_;
  int latent_;
  Rng rng_;
  Net actor_, q1_, q2_, encoder_, decoder_;
  nn::Params<float> actor_target_, q1_target_, q2_target_;
  Matrix<float> candidates_;
};

}  // namespace

std::unique_ptr<Learner> make_bcq(const AlgoConfig& config, const ProblemSpec& problem,
                                  const data::NormalizationStats& norm, std::uint64_t seed) {
  return std::make_unique<BcqLearner>(config, problem, norm, seed);
}

}  // namespace osb::algo::detail
