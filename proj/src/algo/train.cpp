#include <cmath>

#include "nets.hpp"
#include "osb/core/error.hpp"

namespace osb::algo {

bool UpdateReport::finite() const {
  if (!std::isfinite(actor_train_loss)) return false;
  if (critic_loss && !std::isfinite(*critic_loss)) return false;
  for (const auto& [k, v] : aux) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

BatchSampler::BatchSampler(const data::TransitionDataset& data, int batch_size, std::uint64_t seed)
    : data_(&data), batch_size_(batch_size), rng_(seed) {
  if (data.size() == 0) throw ValidationError("cannot sample batches from an empty dataset");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

Batch BatchSampler::next() {
  std::uniform_int_distribution<Eigen::Index> pick(0, data_->size() - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(batch_size_));
  for (auto& r : rows) r = pick(rng_);
  return gather(rows);
}

Batch BatchSampler::gather_from(const data::TransitionDataset& d,
                                const std::vector<Eigen::Index>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Batch b;
  b.states.resize(n, d.state_dim());
  b.actions.resize(n, d.action_dim());
  b.rewards.resize(n, 1);
  b.next_states.resize(n, d.state_dim());
  b.not_done.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    b.states.row(i) = d.states.row(r);
    b.actions.row(i) = d.actions.row(r);
    b.rewards(i, 0) = d.rewards[r];
    b.next_states.row(i) = d.next_states.row(r);
    b.not_done(i, 0) = d.dones[static_cast<std::size_t>(r)] ? 0.0f : 1.0f;
  }
  return b;
}

data::NormalizationStats normalization_for(const AlgoConfig& config,
                                           const data::TransitionDataset& train) {
  const bool normalize = config.algorithm == AlgoId::td3bc && config.td3bc.normalize_states;
  if (normalize && train.size() >= 2) return data::compute_normalization(train);
  return data::NormalizationStats::identity(train.state_dim());
}

std::unique_ptr<Learner> make_learner(const AlgoConfig& config, const ProblemSpec& problem,
                                      const data::NormalizationStats& normalization,
                                      const data::TransitionDataset& train, std::uint64_t seed) {
  config.validate();
  if (problem.state_dim < 1 || problem.action_dim < 1 || !(problem.max_action > 0.0f)) {
    throw ValidationError("problem dimensions and max_action must be positive");
  }
  switch (config.algorithm) {
    case AlgoId::bc: return detail::make_bc(config, problem, normalization, seed);
    case AlgoId::td3bc: return detail::make_td3bc(config, problem, normalization, seed);
    case AlgoId::bcq: return detail::make_bcq(config, problem, normalization, seed);
    case AlgoId::iql: return detail::make_iql(config, problem, normalization, seed);
    case AlgoId::dac: return detail::make_dac(config, problem, normalization, train, seed);
  }
  throw ValidationError("unknown algorithm");
}

TrainResult train_agent(const AlgoConfig& config, const ProblemSpec& problem,
                        const data::TransitionDataset& train, std::int64_t n_updates,
                        std::int64_t checkpoint_every, std::uint64_t seed, const TrainHooks& hooks,
                        bool record_reports) {
  if (train.size() == 0) throw ValidationError("training dataset is empty");
  if (n_updates < 0) throw ValidationError("n_updates must be >= 0");
  if (checkpoint_every < 1) throw ValidationError("checkpoint_every must be >= 1");
  if (hooks.eval_every < 0) throw ValidationError("eval_every must be >= 0");
  if (train.state_dim() != problem.state_dim || train.action_dim() != problem.action_dim) {
    throw ValidationError("dataset dims do not match the problem spec");
  }
  train.validate();

  TrainResult result;
  result.normalization = normalization_for(config, train);
  data::TransitionDataset normalized = train;
  normalized.states = result.normalization.apply(train.states);
  normalized.next_states = result.normalization.apply(train.next_states);

  auto learner = make_learner(config, problem, result.normalization, normalized,
                              derive_seed(seed, "learner"));
  BatchSampler sampler(normalized, config.batch_size, derive_seed(seed, "batches"));

  auto visit = [&](std::int64_t u) {
    const bool is_ckpt = u % checkpoint_every == 0;
    const bool is_eval = hooks.eval_every > 0 && u % hooks.eval_every == 0 && hooks.on_eval;
    if (!is_ckpt && !is_eval) return;
    PolicyCheckpoint snap = learner->snapshot(u);
    if (is_eval) hooks.on_eval(snap);
    if (is_ckpt) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(snap);
      if (hooks.keep_checkpoints) result.checkpoints.push_back(std::move(snap));
    }
  };

  visit(0);
  for (std::int64_t u = 1; u <= n_updates; ++u) {
    UpdateReport report = learner->update(sampler.next());
    if (!report.finite()) {
      throw RuntimeFailure(to_string(config.algorithm) + " produced a non-finite loss at update " +
                           std::to_string(u));
    }
    if (hooks.on_update) hooks.on_update(u, report);
    if (record_reports) result.reports.push_back(std::move(report));
    visit(u);
  }
  result.learner_env_steps = learner->env_steps();
  return result;
}

namespace detail {

double critic_step(Net& q1, Net& q2, const Matrix<float>& input, const Matrix<float>& target) {
  double total = 0.0;
  for (Net* q : {&q1, &q2}) {
    Tp t;
    auto b = nn::bind(t, q->params);
    Var loss = mse(t, nn::forward(t, q->spec, b, t.constant(input)), t.constant(target));
    t.backward(loss);
    total += t.scalar(loss);
    q->step(nn::collect_gradient(t, b, q->params));
  }
  return total;
}

}  // namespace detail
}  // namespace osb::algo
