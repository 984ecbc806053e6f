#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osb/nn/tape.hpp"

namespace osb::nn {

enum class Activation { relu, tanh };
enum class OutputTransform { identity, tanh_scaled };

struct MLPSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden;
  Activation activation = Activation::relu;
  OutputTransform output = OutputTransform::identity;
  double bound = 1.0;  // tanh_scaled: outputs lie in [-bound, bound]

  Eigen::Index num_params() const;
  void validate() const;
  bool operator==(const MLPSpec&) const = default;
};

// "in=4 out=2 hidden=64,64 act=relu out_transform=tanh_scaled bound=1"
std::string to_string(const MLPSpec& spec);
MLPSpec parse_mlp_spec(const std::string& text);

// One dense tensor inside a flat parameter vector (column-major).
struct TensorShape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index offset = 0;
  Eigen::Index size() const { return rows * cols; }
  bool operator==(const TensorShape&) const = default;
};

// Per layer: weight (fan_in x fan_out) then bias (1 x fan_out).
std::vector<TensorShape> parameter_layout(const MLPSpec& spec);

template <typename T>
struct Params {
  Vector<T> values;
  std::vector<TensorShape> shapes;

  Eigen::Index size() const { return values.size(); }
  Eigen::Map<const Matrix<T>> tensor(std::size_t i) const {
    const auto& s = shapes[i];
    return {values.data() + s.offset, s.rows, s.cols};
  }
  Eigen::Map<Matrix<T>> tensor(std::size_t i) {
    const auto& s = shapes[i];
    return {values.data() + s.offset, s.rows, s.cols};
  }
  template <typename U>
  Params<U> cast() const {
    return {values.template cast<U>(), shapes};
  }
};

// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
Params<T> init_params(const MLPSpec& spec, std::uint64_t seed);

// Plain evaluation, one output row per input row. Throws ValidationError on a
// width mismatch or non-finite input.
template <typename T>
Matrix<T> forward(const MLPSpec& spec, const Params<T>& params, const Matrix<T>& input);

// Parameter tensors placed on a tape, either as tracked leaves or constants.
struct BoundParams {
  std::vector<Var> tensors;
};

template <typename T>
BoundParams bind(Tape<T>& tape, const Params<T>& params, bool tracked = true);

template <typename T>
Var forward(Tape<T>& tape, const MLPSpec& spec, const BoundParams& params, Var input);

// Flat gradient of the last backward() pass w.r.t. the bound parameters.
template <typename T>
Vector<T> collect_gradient(const Tape<T>& tape, const BoundParams& bound, const Params<T>& params);

// Graph for d(sum over rows of output column 0)/d(input), itself
// differentiable w.r.t. the parameters. Identity output transform only.
template <typename T>
Var input_gradient(Tape<T>& tape, const MLPSpec& spec, const BoundParams& params, Var input);

// Evaluates `loss_fn(tape, bound_params)` (a 1x1 node) and returns its exact
// gradient w.r.t. every entry of `params`.
template <typename T, typename LossFn>
Vector<T> gradient(LossFn&& loss_fn, const Params<T>& params) {
  Tape<T> tape;
  BoundParams bound = bind(tape, params, true);
  Var loss = loss_fn(tape, bound);
  tape.backward(loss);
  return collect_gradient(tape, bound, params);
}

}  // namespace osb::nn
