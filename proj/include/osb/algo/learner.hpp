#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "osb/algo/checkpoint.hpp"
#include "osb/algo/config.hpp"
#include "osb/core/seed.hpp"
#include "osb/data/dataset.hpp"

namespace osb::algo {

using nn::Matrix;

// Column-major copy of sampled rows. States are already normalized.
struct Batch {
  Matrix<float> states;
  Matrix<float> actions;
  Matrix<float> rewards;      // n x 1
  Matrix<float> next_states;
  Matrix<float> not_done;     // n x 1, 1 - terminal
  Eigen::Index size() const { return states.rows(); }
};

struct UpdateReport {
  double actor_train_loss = 0.0;
  std::optional<double> critic_loss;
  std::map<std::string, double> aux;

  bool finite() const;
};

// Uniform sampling with replacement.
class BatchSampler {
 public:
  BatchSampler(const data::TransitionDataset& data, int batch_size, std::uint64_t seed);
  Batch next();
  Batch gather(const std::vector<Eigen::Index>& rows) const { return gather_from(*data_, rows); }
  static Batch gather_from(const data::TransitionDataset& data, const std::vector<Eigen::Index>& rows);

 private:
  const data::TransitionDataset* data_;
  int batch_size_;
  Rng rng_;
};

// One learner per run. update() performs exactly one gradient update of
// every network the method trains at that step.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual UpdateReport update(const Batch& batch) = 0;
  virtual PolicyCheckpoint snapshot(std::int64_t update_index) const = 0;
  // Environment steps taken by the learner itself (DAC only).
  virtual std::uint64_t env_steps() const { return 0; }
};

// `normalization` is stored in every snapshot; batches passed to update() are
// expected in the normalized space. `expert_data` (normalized) is used by DAC.
std::unique_ptr<Learner> make_learner(const AlgoConfig& config, const ProblemSpec& problem,
                                      const data::NormalizationStats& normalization,
                                      const data::TransitionDataset& train, std::uint64_t seed);

struct TrainHooks {
  // Invoked at update 0 and every `eval_every` updates (and at n_updates).
  std::int64_t eval_every = 0;
  std::function<void(const PolicyCheckpoint&)> on_eval;
  // Invoked for each retained checkpoint as soon as it is taken.
  std::function<void(const PolicyCheckpoint&)> on_checkpoint;
  std::function<void(std::int64_t update_index, const UpdateReport&)> on_update;
  // Drop checkpoints from the result after on_checkpoint has seen them.
  bool keep_checkpoints = true;
};

struct TrainResult {
  std::vector<PolicyCheckpoint> checkpoints;
  std::vector<UpdateReport> reports;  // empty unless requested via record_reports
  std::uint64_t learner_env_steps = 0;
  data::NormalizationStats normalization;
};

// Checkpoints at update 0 and every `checkpoint_every` updates: exactly
// floor(n_updates / checkpoint_every) + 1 of them. Throws ValidationError on
// an empty dataset or non-positive cadence.
TrainResult train_agent(const AlgoConfig& config, const ProblemSpec& problem,
                        const data::TransitionDataset& train, std::int64_t n_updates,
                        std::int64_t checkpoint_every, std::uint64_t seed,
                        const TrainHooks& hooks = {}, bool record_reports = false);

// Normalization used for a config: train-split statistics for TD3-BC with
// normalize_states, identity otherwise.
data::NormalizationStats normalization_for(const AlgoConfig& config,
                                           const data::TransitionDataset& train);

}  // namespace osb::algo
