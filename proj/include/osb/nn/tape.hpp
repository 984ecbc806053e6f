#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace osb::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode differentiation over dense matrices. Rows are batch samples.
// A tape records one computation; call backward() once on a 1x1 node, then
// read gradients of tracked leaves. Constants and everything computed only
// from constants carry no gradient.
template <typename T>
class Tape {
 public:
  using M = Matrix<T>;

  Var constant(M value);
  Var leaf(M value);
  Var detach(Var a);

  const M& value(Var v) const { return nodes_[v.id].value; }
  T scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  bool tracked(Var v) const { return nodes_[v.id].tracked; }
  // Zero matrix if no gradient reached `v`.
  M grad(Var v) const;

  void backward(Var loss);

  Var matmul(Var a, Var b);     // a b
  Var matmul_nt(Var a, Var b);  // a b^T
  Var add_bias(Var x, Var bias);  // x + 1 bias, bias is 1 x cols
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  Var add_scalar(Var a, T offset);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);  // log(1 + e^a), stable
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var square(Var a);
  Var abs(Var a);
  // Identity inside (lo, hi), constant (zero gradient) outside.
  Var clamp(Var a, T lo, T hi);
  Var minimum(Var a, Var b);
  Var maximum(Var a, Var b);
  Var sum(Var a);   // 1 x 1
  Var mean(Var a);  // 1 x 1
  Var row_sum(Var a);   // n x 1
  Var row_mean(Var a);  // n x 1
  Var mul_rows(Var x, Var weights);  // row i of x times weights(i, 0)
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    M value;
    M grad;
    bool tracked = false;
    std::function<void()> back;
  };

  Var push(M value, bool tracked, std::function<void()> back = {});
  template <typename Expr>
  void accumulate(int id, const Expr& g);
  bool any_tracked(Var a) const { return nodes_[a.id].tracked; }
  bool any_tracked(Var a, Var b) const { return nodes_[a.id].tracked || nodes_[b.id].tracked; }
  M& g(int id) { return nodes_[id].grad; }
  const M& v(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace osb::nn
