#pragma once

#include <cstdint>

#include "osb/nn/mlp.hpp"

namespace osb::nn {

template <typename T>
struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Vector<T> first_moment;
  Vector<T> second_moment;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index size, double learning_rate);
};

// Bias-corrected adaptive-moment step, in place.
template <typename T>
void adam_step(AdamState<T>& state, Params<T>& params, const Vector<T>& gradient);

// target <- tau * online + (1 - tau) * target, in place.
template <typename T>
void polyak_update(Params<T>& target, const Params<T>& online, double tau);

}  // namespace osb::nn
