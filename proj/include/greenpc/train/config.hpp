#pragma once

#include <cstdint>
#include <vector>

namespace greenpc::train {

struct BatchComposition {
  int boundary = 500;
  int anchors = 500;
  int uniform = 500;
  int near_diagonal = 1500;

  int total() const { return boundary + anchors + uniform + near_diagonal; }
  BatchComposition scaled(int factor) const {
    return {boundary * factor, anchors * factor, uniform * factor, near_diagonal * factor};
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::vector<int> epochs_per_stage;
  int batches_per_epoch = 20;
  BatchComposition batch;
  double w_res = 1.0;
  double w_bc = 1.0;
  double w_aux_start = 1.0;
  double w_aux_floor = 0.01;
  /// When false the anchor term is weighted by zero; batches are drawn identically.
  bool use_anchors = true;
  AdamConfig adam;
  double stage_lr_decay = 0.5;
  double dd_shared_lr_scale = 0.1;
  int dd_epochs = 0;
  double dd_perturbation = 1e-2;
  int gate_pretrain_steps = 500;
  int gate_pretrain_max_steps = 5000;
  int gate_jitter_copies = 20;
  double gate_jitter = 0.05;
  double gate_target = 0.9;
  double gate_lr = 1e-2;
  int anchor_pool = 1024;
  double near_radius = 3.0;
  double divergence_factor = 1e6;
  double theta_min = 0.0;
  double theta_max = 3.141592653589793;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace greenpc::train
