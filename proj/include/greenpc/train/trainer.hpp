#pragma once

#include "greenpc/nn/model.hpp"
#include "greenpc/train/loss.hpp"

#include <functional>
#include <iosfwd>
#include <string>

namespace greenpc::train {

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  double w_aux = 1.0;
  double lr = 0.0;
};

struct StageReport {
  std::string name;
  double eps = 0.0;
  std::vector<EpochRecord> epochs;
  double seconds = 0.0;
};

struct GateReport {
  int steps = 0;
  Eigen::VectorXd seed_weights;  // weight of each seed's own subdomain
  bool reached_target = false;
};

/// Exponential decay from `start` at epoch 0 to `floor` at the last epoch.
double aux_weight_schedule(int epoch, int total_epochs, double start = 1.0, double floor = 0.01);

class Trainer {
public:
  using Progress = std::function<void(const StageReport&, const EpochRecord&)>;

  Trainer(const pde::CoefficientField& coeffs, TrainingData data, TrainConfig config);

  /// Adds the next eps level to `model` and trains all active parameters.
  StageReport train_stage(nn::MsnnModel& model);

  /// Replicates the finest level, pretrains the gate and fine-tunes the mixture.
  StageReport dd_specialize(nn::MsnnModel& model, GateReport* gate_report = nullptr);

  /// Cross-entropy pretraining of the gate on the seeds and jittered copies.
  GateReport pretrain_gate(nn::MsnnModel& model);

  void set_progress(Progress p) { progress_ = std::move(p); }
  Rng& rng() { return rng_; }
  const TrainConfig& config() const { return config_; }

private:
  StageReport optimize(nn::MsnnModel& model, const std::string& name, double eps, int epochs, double lr,
                       double shared_scale);

  pde::CoefficientField coeffs_;
  TrainingData data_;
  TrainConfig config_;
  Rng rng_;
  Progress progress_;
};

/// CSV with header "epoch,L_res,L_bc,L_aux,total,w_aux,lr".
void write_stage_csv(const StageReport& report, std::ostream& os);

}  // namespace greenpc::train
