#include "osb/nn/mlp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "osb/core/error.hpp"
#include "osb/core/seed.hpp"

namespace osb::nn {

Eigen::Index MLPSpec::num_params() const {
  Eigen::Index total = 0;
  for (const auto& s : parameter_layout(*this)) total += s.size();
  return total;
}

void MLPSpec::validate() const {
  std::string problems;
  if (input_dim < 1) problems += "input_dim must be >= 1; ";
  if (output_dim < 1) problems += "output_dim must be >= 1; ";
  for (int w : hidden) {
    if (w < 1) problems += "hidden widths must be >= 1; ";
  }
  if (output == OutputTransform::tanh_scaled && !(bound >= 0.0)) problems += "bound must be >= 0; ";
  if (!problems.empty()) throw ValidationError("invalid MLPSpec: " + problems);
}

std::string to_string(const MLPSpec& spec) {
  std::ostringstream out;
  out << "in=" << spec.input_dim << " out=" << spec.output_dim << " hidden=";
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) out << (i ? "," : "") << spec.hidden[i];
  if (spec.hidden.empty()) out << "none";
  out << " act=" << (spec.activation == Activation::relu ? "relu" : "tanh");
  out << " out_transform="
      << (spec.output == OutputTransform::identity ? "identity" : "tanh_scaled");
  out.precision(17);
  out << " bound=" << spec.bound;
  return out.str();
}

MLPSpec parse_mlp_spec(const std::string& text) {
  MLPSpec spec;
  std::istringstream in(text);
  std::string token;
  try {
    while (in >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) throw ValidationError("bad MLP spec token '" + token + "'");
      const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
      if (key == "in") {
        spec.input_dim = std::stoi(value);
      } else if (key == "out") {
        spec.output_dim = std::stoi(value);
      } else if (key == "hidden") {
        spec.hidden.clear();
        if (value != "none") {
          std::istringstream widths(value);
          std::string w;
          while (std::getline(widths, w, ',')) spec.hidden.push_back(std::stoi(w));
        }
      } else if (key == "act") {
        if (value != "relu" && value != "tanh") throw ValidationError("unknown activation " + value);
        spec.activation = value == "relu" ? Activation::relu : Activation::tanh;
      } else if (key == "out_transform") {
        if (value != "identity" && value != "tanh_scaled") {
          throw ValidationError("unknown output transform " + value);
        }
        spec.output = value == "identity" ? OutputTransform::identity : OutputTransform::tanh_scaled;
      } else if (key == "bound") {
        spec.bound = std::stod(value);
      } else {
        throw ValidationError("unknown MLP spec key '" + key + "'");
      }
    }
  } catch (const std::logic_error&) {
    throw ValidationError("malformed MLP spec '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::vector<TensorShape> parameter_layout(const MLPSpec& spec) {
  std::vector<TensorShape> shapes;
  Eigen::Index offset = 0;
  int fan_in = spec.input_dim;
  auto add_layer = [&](int fan_out) {
    shapes.push_back({fan_in, fan_out, offset});
    offset += static_cast<Eigen::Index>(fan_in) * fan_out;
    shapes.push_back({1, fan_out, offset});
    offset += fan_out;
    fan_in = fan_out;
  };
  for (int w : spec.hidden) add_layer(w);
  add_layer(spec.output_dim);
  return shapes;
}

template <typename T>
Params<T> init_params(const MLPSpec& spec, std::uint64_t seed) {
  spec.validate();
  Params<T> p;
  p.shapes = parameter_layout(spec);
  p.values.resize(spec.num_params());
  Rng rng(derive_seed(seed, "mlp-init"));
  for (std::size_t layer = 0; layer < p.shapes.size(); layer += 2) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(p.shapes[layer].rows));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t t = layer; t < layer + 2; ++t) {
      auto tensor = p.tensor(t);
      for (Eigen::Index i = 0; i < tensor.size(); ++i) tensor.data()[i] = static_cast<T>(dist(rng));
    }
  }
  return p;
}

namespace {

template <typename T>
void apply_activation(Matrix<T>& x, Activation act) {
  if (act == Activation::relu) {
    x = x.cwiseMax(T(0));
  } else {
    x = x.array().tanh().matrix();
  }
}

}  // namespace

template <typename T>
Matrix<T> forward(const MLPSpec& spec, const Params<T>& params, const Matrix<T>& input) {
  if (input.cols() != spec.input_dim) {
    throw ValidationError("MLP input has " + std::to_string(input.cols()) + " columns, expected " +
                          std::to_string(spec.input_dim));
  }
  if (!input.allFinite()) throw ValidationError("MLP input contains non-finite values");
  Matrix<T> h = input;
  const std::size_t layers = params.shapes.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix<T> z = h * params.tensor(2 * l);
    z.rowwise() += params.tensor(2 * l + 1).row(0);
    if (l + 1 < layers) apply_activation(z, spec.activation);
    h = std::move(z);
  }
  if (spec.output == OutputTransform::tanh_scaled) {
    h = (h.array().tanh() * static_cast<T>(spec.bound)).matrix();
  }
  return h;
}

template <typename T>
BoundParams bind(Tape<T>& tape, const Params<T>& params, bool tracked) {
  BoundParams bound;
  bound.tensors.reserve(params.shapes.size());
  for (std::size_t i = 0; i < params.shapes.size(); ++i) {
    Matrix<T> m = params.tensor(i);
    bound.tensors.push_back(tracked ? tape.leaf(std::move(m)) : tape.constant(std::move(m)));
  }
  return bound;
}

template <typename T>
Var forward(Tape<T>& tape, const MLPSpec& spec, const BoundParams& params, Var input) {
  if (tape.value(input).cols() != spec.input_dim) {
    throw ValidationError("MLP input has " + std::to_string(tape.value(input).cols()) +
                          " columns, expected " + std::to_string(spec.input_dim));
  }
  Var h = input;
  const std::size_t layers = params.tensors.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.add_bias(tape.matmul(h, params.tensors[2 * l]), params.tensors[2 * l + 1]);
    if (l + 1 < layers) h = spec.activation == Activation::relu ? tape.relu(h) : tape.tanh(h);
  }
  if (spec.output == OutputTransform::tanh_scaled) {
    h = tape.scale(tape.tanh(h), static_cast<T>(spec.bound));
  }
  return h;
}

template <typename T>
Vector<T> collect_gradient(const Tape<T>& tape, const BoundParams& bound, const Params<T>& params) {
  Vector<T> grad(params.size());
  for (std::size_t i = 0; i < params.shapes.size(); ++i) {
    const auto& s = params.shapes[i];
    Matrix<T> g = tape.grad(bound.tensors[i]);
    grad.segment(s.offset, s.size()) = Eigen::Map<const Vector<T>>(g.data(), s.size());
  }
  return grad;
}

template <typename T>
Var input_gradient(Tape<T>& tape, const MLPSpec& spec, const BoundParams& params, Var input) {
  if (spec.output != OutputTransform::identity) {
    throw ValidationError("input_gradient supports identity outputs only");
  }
  const std::size_t layers = params.tensors.size() / 2;
  std::vector<Var> hidden;  // post-activation values, one per hidden layer
  std::vector<Var> pre;     // pre-activation values
  Var h = input;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Var z = tape.add_bias(tape.matmul(h, params.tensors[2 * l]), params.tensors[2 * l + 1]);
    pre.push_back(z);
    h = spec.activation == Activation::relu ? tape.relu(z) : tape.tanh(z);
    hidden.push_back(h);
  }
  const auto rows = tape.value(input).rows();
  // Seed: d(sum_i out_i0)/d(out) selects column 0.
  Matrix<T> seed = Matrix<T>::Zero(rows, spec.output_dim);
  seed.col(0).setOnes();
  Var g = tape.matmul_nt(tape.constant(std::move(seed)), params.tensors[2 * (layers - 1)]);
  for (std::size_t l = layers - 1; l-- > 0;) {
    Var deriv;
    if (spec.activation == Activation::relu) {
      Matrix<T> mask = (tape.value(pre[l]).array() > T(0)).template cast<T>().matrix();
      deriv = tape.constant(std::move(mask));
    } else {
      deriv = tape.add_scalar(tape.scale(tape.square(hidden[l]), T(-1)), T(1));
    }
    g = tape.matmul_nt(tape.mul(g, deriv), params.tensors[2 * l]);
  }
  return g;
}

template Params<float> init_params<float>(const MLPSpec&, std::uint64_t);
template Params<double> init_params<double>(const MLPSpec&, std::uint64_t);
template Matrix<float> forward<float>(const MLPSpec&, const Params<float>&, const Matrix<float>&);
template Matrix<double> forward<double>(const MLPSpec&, const Params<double>&, const Matrix<double>&);
template BoundParams bind<float>(Tape<float>&, const Params<float>&, bool);
template BoundParams bind<double>(Tape<double>&, const Params<double>&, bool);
template Var forward<float>(Tape<float>&, const MLPSpec&, const BoundParams&, Var);
template Var forward<double>(Tape<double>&, const MLPSpec&, const BoundParams&, Var);
template Vector<float> collect_gradient<float>(const Tape<float>&, const BoundParams&, const Params<float>&);
template Vector<double> collect_gradient<double>(const Tape<double>&, const BoundParams&,
                                                 const Params<double>&);
template Var input_gradient<float>(Tape<float>&, const MLPSpec&, const BoundParams&, Var);
template Var input_gradient<double>(Tape<double>&, const MLPSpec&, const BoundParams&, Var);

}  // namespace osb::nn
