#include "osb/nn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace osb::nn {

template <typename T>
Var Tape<T>::push(M value, bool tracked, std::function<void()> back) {
  Node node;
  node.value = std::move(value);
  node.tracked = tracked;
  if (tracked) node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
template <typename Expr>
void Tape<T>::accumulate(int id, const Expr& grad) {
  Node& node = nodes_[id];
  if (!node.tracked) return;
  if (node.grad.size() == 0) {
    node.grad = grad;
  } else {
    node.grad += grad;
  }
}

template <typename T>
Var Tape<T>::constant(M value) {
  return push(std::move(value), false);
}

template <typename T>
Var Tape<T>::leaf(M value) {
  return push(std::move(value), true, [] {});
}

template <typename T>
Var Tape<T>::detach(Var a) {
  return constant(v(a.id));
}

template <typename T>
typename Tape<T>::M Tape<T>::grad(Var x) const {
  const Node& node = nodes_[x.id];
  if (node.grad.size() == 0) return M::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (v(loss.id).size() != 1) throw std::invalid_argument("backward() needs a 1x1 loss");
  for (auto& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[loss.id].tracked) return;
  nodes_[loss.id].grad = M::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.tracked && node.grad.size() != 0 && node.back) node.back();
  }
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia) * v(ib), any_tracked(a, b), [this, ia, ib, out] {
    if (nodes_[ia].tracked) accumulate(ia, g(out) * v(ib).transpose());
    if (nodes_[ib].tracked) accumulate(ib, v(ia).transpose() * g(out));
  });
}

template <typename T>
Var Tape<T>::matmul_nt(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia) * v(ib).transpose(), any_tracked(a, b), [this, ia, ib, out] {
    if (nodes_[ia].tracked) accumulate(ia, g(out) * v(ib));
    if (nodes_[ib].tracked) accumulate(ib, g(out).transpose() * v(ia));
  });
}

template <typename T>
Var Tape<T>::add_bias(Var x, Var bias) {
  const int ix = x.id, ib = bias.id;
  const int out = static_cast<int>(nodes_.size());
  M value = v(ix);
  value.rowwise() += v(ib).row(0);
  return push(std::move(value), any_tracked(x, bias), [this, ix, ib, out] {
    accumulate(ix, g(out));
    if (nodes_[ib].tracked) accumulate(ib, g(out).colwise().sum());
  });
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia) + v(ib), any_tracked(a, b), [this, ia, ib, out] {
    accumulate(ia, g(out));
    accumulate(ib, g(out));
  });
}

template <typename T>
Var Tape<T>::sub(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia) - v(ib), any_tracked(a, b), [this, ia, ib, out] {
    accumulate(ia, g(out));
    accumulate(ib, -g(out));
  });
}

template <typename T>
Var Tape<T>::mul(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseProduct(v(ib)), any_tracked(a, b), [this, ia, ib, out] {
    accumulate(ia, g(out).cwiseProduct(v(ib)));
    accumulate(ib, g(out).cwiseProduct(v(ia)));
  });
}

template <typename T>
Var Tape<T>::scale(Var a, T factor) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia) * factor, any_tracked(a), [this, ia, out, factor] {
    accumulate(ia, g(out) * factor);
  });
}

template <typename T>
Var Tape<T>::add_scalar(Var a, T offset) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push((v(ia).array() + offset).matrix(), any_tracked(a),
              [this, ia, out] { accumulate(ia, g(out)); });
}

template <typename T>
Var Tape<T>::relu(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseMax(T(0)), any_tracked(a), [this, ia, out] {
    accumulate(ia, (v(ia).array() > T(0)).select(g(out), T(0)));
  });
}

template <typename T>
Var Tape<T>::tanh(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).array().tanh().matrix(), any_tracked(a), [this, ia, out] {
    accumulate(ia, (g(out).array() * (T(1) - v(out).array().square())).matrix());
  });
}

template <typename T>
Var Tape<T>::sigmoid(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  M value = v(ia).unaryExpr([](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  });
  return push(std::move(value), any_tracked(a), [this, ia, out] {
    accumulate(ia, (g(out).array() * v(out).array() * (T(1) - v(out).array())).matrix());
  });
}

template <typename T>
Var Tape<T>::softplus(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  M value = v(ia).unaryExpr(
      [](T x) { return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x))); });
  return push(std::move(value), any_tracked(a), [this, ia, out] {
    M sig = v(ia).unaryExpr([](T x) {
      if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
      const T e = std::exp(x);
      return e / (T(1) + e);
    });
    accumulate(ia, g(out).cwiseProduct(sig));
  });
}

template <typename T>
Var Tape<T>::exp(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).array().exp().matrix(), any_tracked(a), [this, ia, out] {
    accumulate(ia, g(out).cwiseProduct(v(out)));
  });
}

template <typename T>
Var Tape<T>::log(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).array().log().matrix(), any_tracked(a), [this, ia, out] {
    accumulate(ia, g(out).cwiseQuotient(v(ia)));
  });
}

template <typename T>
Var Tape<T>::sqrt(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseSqrt(), any_tracked(a), [this, ia, out] {
    accumulate(ia, (g(out).array() / (T(2) * v(out).array())).matrix());
  });
}

template <typename T>
Var Tape<T>::square(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseAbs2(), any_tracked(a), [this, ia, out] {
    accumulate(ia, (T(2) * v(ia).array() * g(out).array()).matrix());
  });
}

template <typename T>
Var Tape<T>::abs(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseAbs(), any_tracked(a), [this, ia, out] {
    accumulate(ia, (g(out).array() * v(ia).array().sign()).matrix());
  });
}

template <typename T>
Var Tape<T>::clamp(Var a, T lo, T hi) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseMax(lo).cwiseMin(hi), any_tracked(a), [this, ia, out, lo, hi] {
    const auto& x = v(ia).array();
    accumulate(ia, ((x > lo) && (x < hi)).select(g(out), T(0)));
  });
}

template <typename T>
Var Tape<T>::minimum(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseMin(v(ib)), any_tracked(a, b), [this, ia, ib, out] {
    const auto pick_a = v(ia).array() <= v(ib).array();
    accumulate(ia, pick_a.select(g(out), T(0)));
    accumulate(ib, pick_a.select(T(0), g(out)));
  });
}

template <typename T>
Var Tape<T>::maximum(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).cwiseMax(v(ib)), any_tracked(a, b), [this, ia, ib, out] {
    const auto pick_a = v(ia).array() >= v(ib).array();
    accumulate(ia, pick_a.select(g(out), T(0)));
    accumulate(ib, pick_a.select(T(0), g(out)));
  });
}

template <typename T>
Var Tape<T>::sum(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(M::Constant(1, 1, v(ia).sum()), any_tracked(a), [this, ia, out] {
    accumulate(ia, M::Constant(v(ia).rows(), v(ia).cols(), g(out)(0, 0)));
  });
}

template <typename T>
Var Tape<T>::mean(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  const T count = static_cast<T>(v(ia).size());
  return push(M::Constant(1, 1, v(ia).sum() / count), any_tracked(a), [this, ia, out, count] {
    accumulate(ia, M::Constant(v(ia).rows(), v(ia).cols(), g(out)(0, 0) / count));
  });
}

template <typename T>
Var Tape<T>::row_sum(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).rowwise().sum(), any_tracked(a), [this, ia, out] {
    accumulate(ia, g(out).replicate(1, v(ia).cols()));
  });
}

template <typename T>
Var Tape<T>::row_mean(Var a) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  const T cols = static_cast<T>(v(ia).cols());
  return push(v(ia).rowwise().sum() / cols, any_tracked(a), [this, ia, out, cols] {
    accumulate(ia, g(out).replicate(1, v(ia).cols()) / cols);
  });
}

template <typename T>
Var Tape<T>::mul_rows(Var x, Var weights) {
  const int ix = x.id, iw = weights.id;
  const int out = static_cast<int>(nodes_.size());
  M value = (v(ix).array().colwise() * v(iw).col(0).array()).matrix();
  return push(std::move(value), any_tracked(x, weights), [this, ix, iw, out] {
    if (nodes_[ix].tracked) accumulate(ix, (g(out).array().colwise() * v(iw).col(0).array()).matrix());
    if (nodes_[iw].tracked) accumulate(iw, g(out).cwiseProduct(v(ix)).rowwise().sum());
  });
}

template <typename T>
Var Tape<T>::concat_cols(Var a, Var b) {
  const int ia = a.id, ib = b.id;
  const int out = static_cast<int>(nodes_.size());
  M value(v(ia).rows(), v(ia).cols() + v(ib).cols());
  value << v(ia), v(ib);
  return push(std::move(value), any_tracked(a, b), [this, ia, ib, out] {
    const auto ca = v(ia).cols();
    accumulate(ia, g(out).leftCols(ca));
    accumulate(ib, g(out).rightCols(v(ib).cols()));
  });
}

template <typename T>
Var Tape<T>::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const int ia = a.id;
  const int out = static_cast<int>(nodes_.size());
  return push(v(ia).middleCols(start, count), any_tracked(a), [this, ia, out, start, count] {
    M full = M::Zero(v(ia).rows(), v(ia).cols());
    full.middleCols(start, count) = g(out);
    accumulate(ia, full);
  });
}

template class Tape<float>;
template class Tape<double>;

}  // namespace osb::nn
