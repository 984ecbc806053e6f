#pragma once

// Helpers shared by the learner implementations.

#include <cstdint>
#include <random>
#include <string>

#include "osb/algo/checkpoint.hpp"
#include "osb/algo/config.hpp"
#include "osb/algo/learner.hpp"
#include "osb/nn/optim.hpp"

namespace osb::algo::detail {

using nn::Tape;
using nn::Var;
using Tp = Tape<float>;

struct Net {
  nn::MLPSpec spec;
  nn::Params<float> params;
  nn::AdamState<float> opt;

  Net() = default;
  Net(nn::MLPSpec s, std::uint64_t seed, double lr)
      : spec(std::move(s)), params(nn::init_params<float>(spec, seed)),
        opt(nn::AdamState<float>::zeros(params.size(), lr)) {}

  Matrix<float> operator()(const Matrix<float>& x) const { return nn::forward(spec, params, x); }
  void step(const nn::Vector<float>& grad) { nn::adam_step(opt, params, grad); }
  NetworkSnapshot snap() const { return {spec, params}; }
};

inline nn::MLPSpec make_spec(int in, int out, const std::vector<int>& hidden, nn::Activation act,
                             nn::OutputTransform transform = nn::OutputTransform::identity,
                             double bound = 1.0) {
  nn::MLPSpec s;
  s.input_dim = in;
  s.output_dim = out;
  s.hidden = hidden;
  s.activation = act;
  s.output = transform;
  s.bound = bound;
  s.validate();
  return s;
}

inline Matrix<float> hcat(const Matrix<float>& a, const Matrix<float>& b) {
  Matrix<float> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

inline Matrix<float> clip(const Matrix<float>& m, float bound) {
  return m.cwiseMax(-bound).cwiseMin(bound);
}

// Mean squared error over all entries, as a 1x1 node.
inline Var mse(Tp& t, Var a, Var b) { return t.mean(t.square(t.sub(a, b))); }

inline Matrix<float> gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<float> normal(0.0f, static_cast<float>(stddev));
  Matrix<float> m(rows, cols);
  // Fill in row-major order so the stream does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

inline PolicyCheckpoint base_snapshot(AlgoId id, const ProblemSpec& problem,
                                      const data::NormalizationStats& norm, std::int64_t index,
                                      const AlgoConfig& config) {
  PolicyCheckpoint c;
  c.update_index = index;
  c.algorithm = id;
  c.state_dim = problem.state_dim;
  c.action_dim = problem.action_dim;
  c.max_action = problem.max_action;
  c.normalization = norm;
  c.config_echo = to_json(config);
  return c;
}

// Actor architecture: actor_hidden if set, else the shared hidden widths.
inline nn::MLPSpec actor_spec(const AlgoConfig& c, const ProblemSpec& p) {
  return make_spec(p.state_dim, p.action_dim, c.actor_hidden.value_or(c.hidden), c.activation,
                   c.actor_output, p.max_action);
}

inline nn::MLPSpec critic_spec(const AlgoConfig& c, int in) {
  return make_spec(in, 1, c.hidden, c.activation);
}

// Twin-critic regression toward fixed targets; returns the summed loss.
double critic_step(Net& q1, Net& q2, const Matrix<float>& input, const Matrix<float>& target);

std::unique_ptr<Learner> make_bc(const AlgoConfig&, const ProblemSpec&, const data::NormalizationStats&,
                                 std::uint64_t seed);
std::unique_ptr<Learner> make_td3bc(const AlgoConfig&, const ProblemSpec&,
                                    const data::NormalizationStats&, std::uint64_t seed);
std::unique_ptr<Learner> make_bcq(const AlgoConfig&, const ProblemSpec&, const data::NormalizationStats&,
                                  std::uint64_t seed);
std::unique_ptr<Learner> make_iql(const AlgoConfig&, const ProblemSpec&, const data::NormalizationStats&,
                                  std::uint64_t seed);
std::unique_ptr<Learner> make_dac(const AlgoConfig&, const ProblemSpec&, const data::NormalizationStats&,
                                  const data::TransitionDataset& expert, std::uint64_t seed);

}  // namespace osb::algo::detail
