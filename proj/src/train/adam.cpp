#include "greenpc/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace greenpc::train {

void adam_step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd>& grads,
               AdamState& state, const std::vector<double>& lr, const AdamConfig& c) {
  if (grads.size() != params.size() || lr.size() != params.size()) throw std::invalid_argument("adam: size mismatch");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
      state.v.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grads[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grads[i].cwiseAbs2();
    params[i]->array() -= lr[i] * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

}  // namespace greenpc::train
