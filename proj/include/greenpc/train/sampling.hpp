#pragma once

#include "greenpc/nn/model.hpp"
#include "greenpc/pde/anchors.hpp"
#include "greenpc/random.hpp"
#include "greenpc/train/config.hpp"

namespace greenpc::train {

/// One mini-batch. Residual points are uniform pairs followed by near-diagonal pairs.
struct Batch {
  nn::Points boundary;
  nn::Points anchors;
  Eigen::RowVectorXd anchor_values;
  nn::Points residual;
  Eigen::Index uniform_count = 0;

  Eigen::Index size() const { return boundary.size() + anchors.size() + residual.size(); }
};

/// Anchor pool plus the sampling domain of the problem.
struct TrainingData {
  int dim = 1;
  bool parametric = false;
  pde::AnchorSet pool;
};

/// Draws `pool_size` anchors without replacement (all of them if fewer exist).
TrainingData make_training_data(const pde::AnchorSet& anchors, int pool_size, bool parametric, Rng& rng);

/// `k` distinct indices from [0, n) in draw order.
std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index k, Rng& rng);

Batch sample_batch(const TrainConfig& config, const TrainingData& data, double eps, Rng& rng);

}  // namespace greenpc::train
