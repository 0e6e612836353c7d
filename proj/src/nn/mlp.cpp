#include "greenpc/nn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace greenpc::nn {

Mlp Mlp::glorot(int input_dim, int width, int hidden_layers, int output_dim, Rng& rng) {
  Mlp net;
  std::vector<int> sizes{input_dim};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(width);
  sizes.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Matrix W(out, in);
    for (int j = 0; j < in; ++j)
      for (int i = 0; i < out; ++i) W(i, j) = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(W));
    net.biases.push_back(Matrix::Zero(out, 1));
  }
  return net;
}

bool Mlp::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l)
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  return true;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

Binding::Binding(Tape& tape, const std::vector<const Matrix*>& params, bool trainable) : tape_(&tape) {
  vars_.reserve(params.size());
  for (const Matrix* p : params) {
    Var v = trainable ? tape.variable(*p) : tape.constant(*p);
    vars_.push_back(v);
    map_.emplace(p, v);
  }
}

Var Binding::operator()(const Matrix& p) const {
  auto it = map_.find(&p);
  if (it != map_.end()) return it->second;
  throw std::logic_error("parameter not bound");
}

void collect(const Mlp& net, std::vector<const Matrix*>& out) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.push_back(&net.weights[l]);
    out.push_back(&net.biases[l]);
  }
}

void collect(Mlp& net, std::vector<Matrix*>& out) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.push_back(&net.weights[l]);
    out.push_back(&net.biases[l]);
  }
}

Var forward(const Mlp& net, const Binding& bind, Var input, const JetLayout& layout, Eigen::Index B) {
  Tape& t = bind.tape();
  Var h = input;
  const std::size_t L = net.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    h = linear(t, bind(net.weights[l]), bind(net.biases[l]), h, B);
    if (l + 1 < L) h = tanh_jet(t, h, layout, B);
  }
  return h;
}

Matrix forward_values(const Mlp& net, const Matrix& input) {
  Matrix h = input;
  const std::size_t L = net.weights.size();
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = net.weights[l] * h;
    z.colwise() += net.biases[l].col(0);
    h = (l + 1 < L) ? Matrix(z.array().tanh().matrix()) : z;
  }
  return h;
}

}  // namespace greenpc::nn
