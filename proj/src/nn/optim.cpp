#include "osb/nn/optim.hpp"

#include <cmath>

#include "osb/core/error.hpp"

namespace osb::nn {

template <typename T>
AdamState<T> AdamState<T>::zeros(Eigen::Index size, double learning_rate) {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = Vector<T>::Zero(size);
  s.second_moment = Vector<T>::Zero(size);
  return s;
}

template <typename T>
void adam_step(AdamState<T>& state, Params<T>& params, const Vector<T>& gradient) {
  if (gradient.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ValidationError("adam_step: gradient/moment/parameter sizes differ");
  }
  ++state.step;
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  state.first_moment = b1 * state.first_moment + (T(1) - b1) * gradient;
  state.second_moment = b2 * state.second_moment + (T(1) - b2) * gradient.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T lr = static_cast<T>(state.learning_rate);
  const T eps = static_cast<T>(state.epsilon);
  params.values.array() -= lr * (state.first_moment.array() / correction1) /
                           ((state.second_moment.array() / correction2).sqrt() + eps);
}

template <typename T>
void polyak_update(Params<T>& target, const Params<T>& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
  if (target.size() != online.size()) throw ValidationError("polyak_update: size mismatch");
  if (tau == 1.0) {
    target.values = online.values;
    return;
  }
  const T t = static_cast<T>(tau);
  target.values = t * online.values + (T(1) - t) * target.values;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(AdamState<float>&, Params<float>&, const Vector<float>&);
template void adam_step<double>(AdamState<double>&, Params<double>&, const Vector<double>&);
template void polyak_update<float>(Params<float>&, const Params<float>&, double);
template void polyak_update<double>(Params<double>&, const Params<double>&, double);

}  // namespace osb::nn
