#pragma once

#include "greenpc/train/config.hpp"

#include <Eigen/Core>

#include <vector>

namespace greenpc::train {

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
};

/// One bias-corrected Adam update; `lr[i]` is the rate of parameter block i.
void adam_step(const std::vector<Eigen::MatrixXd*>& params, const std::vector<Eigen::MatrixXd>& grads,
               AdamState& state, const std::vector<double>& lr, const AdamConfig& config);

}  // namespace greenpc::train
