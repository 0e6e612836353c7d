#pragma once

#include "greenpc/nn/tape.hpp"
#include "greenpc/random.hpp"

#include <unordered_map>
#include <vector>

namespace greenpc::nn {

/// Fully connected network, tanh on hidden layers, linear output.
struct Mlp {
  std::vector<Matrix> weights;  // out x in
  std::vector<Matrix> biases;   // out x 1

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(int input_dim, int width, int hidden_layers, int output_dim, Rng& rng);

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int output_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.back().rows()); }
  int hidden_layers() const { return static_cast<int>(weights.size()) - 1; }
  bool empty() const { return weights.empty(); }
  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Maps parameter matrices (by address) to tape nodes for one forward pass.
class Binding {
public:
  Binding(Tape& tape, const std::vector<const Matrix*>& params, bool trainable);

  Var operator()(const Matrix& p) const;
  Tape& tape() const { return *tape_; }
  const std::vector<Var>& vars() const { return vars_; }

private:
  Tape* tape_;
  std::vector<Var> vars_;
  std::unordered_map<const Matrix*, Var> map_;
};

void collect(const Mlp& net, std::vector<const Matrix*>& out);
void collect(Mlp& net, std::vector<Matrix*>& out);

/// Forward pass on a jet batch of B points (input rows x streams*B).
Var forward(const Mlp& net, const Binding& bind, Var input, const JetLayout& layout, Eigen::Index B);

/// Plain value forward without a tape.
Matrix forward_values(const Mlp& net, const Matrix& input);

}  // namespace greenpc::nn
