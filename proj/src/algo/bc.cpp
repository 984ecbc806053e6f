#include "nets.hpp"

namespace osb::algo::detail {
namespace {

class BcLearner final : public Learner {
 public:
  BcLearner(const AlgoConfig& config, const ProblemSpec& problem,
            const data::NormalizationStats& norm, std::uint64_t seed)
      : config_(config), problem_(problem), norm_(norm),
        actor_(actor_spec(config, problem), derive_seed(seed, "actor"), config.learning_rate) {}

  UpdateReport update(const Batch& batch) override {
    Tp t;
    auto b = nn::bind(t, actor_.params);
    Var pi = nn::forward(t, actor_.spec, b, t.constant(batch.states));
    Var loss = mse(t, pi, t.constant(batch.actions));
    t.backward(loss);
    actor_.step(nn::collect_gradient(t, b, actor_.params));
    UpdateReport r;
    r.actor_train_loss = t.scalar(loss);
    return r;
  }

  PolicyCheckpoint snapshot(std::int64_t index) const override {
    auto c = base_snapshot(AlgoId::bc, problem_, norm_, index, config_);
    c.networks.emplace("actor", actor_.snap());
    return c;
  }

 private:
  AlgoConfig config_;
  ProblemSpec problem_;
  data::NormalizationStats norm_;
  Net actor_;
};

}  // namespace

std::unique_ptr<Learner> make_bc(const AlgoConfig& config, const ProblemSpec& problem,
                                 const data::NormalizationStats& norm, std::uint64_t seed) {
  return std::make_unique<BcLearner>(config, problem, norm, seed);
}

}  // namespace osb::algo::detail
