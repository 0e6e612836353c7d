#include "greenpc/train/trainer.hpp"

#include "greenpc/error.hpp"
#include "greenpc/train/adam.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace greenpc::train {

double aux_weight_schedule(int epoch, int total_epochs, double start, double floor) {
  if (total_epochs <= 1) return start;
  const double s = std::clamp(static_cast<double>(epoch) / (total_epochs - 1), 0.0, 1.0);
  return start * std::pow(floor / start, s);
}

Trainer::Trainer(const pde::CoefficientField& coeffs, TrainingData data, TrainConfig config)
    : coeffs_(coeffs), data_(std::move(data)), config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (data_.pool.size() == 0) throw ConfigError("empty anchor set");
}

StageReport Trainer::train_stage(nn::MsnnModel& model) {
  const int k = model.level_count();
  if (model.gated()) throw std::logic_error("train_stage after the mixture stage");
  if (k >= static_cast<int>(config_.epochs_per_stage.size())) throw ConfigError("no epochs configured for stage " + std::to_string(k + 1));
  model.add_level(rng_);
  const double lr = config_.adam.lr * std::pow(config_.stage_lr_decay, k);
  return optimize(model, "stage" + std::to_string(k + 1), model.finest_eps(), config_.epochs_per_stage[static_cast<std::size_t>(k)],
                  lr, 1.0);
}

GateReport Trainer::pretrain_gate(nn::MsnnModel& model) {
  const auto& arch = model.arch();
  const int Q = arch.replicas;
  const int sd = arch.gate_seed_dim();
  const int copies = 1 + config_.gate_jitter_copies;
  const bool angular = arch.gate_input == nn::GateInput::parameter;
  const double jitter = config_.gate_jitter * (angular ? config_.theta_max - config_.theta_min : 1.0);

  nn::Matrix coords(sd, Q * copies);
  std::vector<int> labels;
  nn::Matrix seeds(sd, Q);
  for (int m = 0; m < Q; ++m) {
    for (int i = 0; i < sd; ++i) seeds(i, m) = arch.gate_seeds[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)];
    for (int c = 0; c < copies; ++c) {
      const int col = m * copies + c;
      for (int i = 0; i < sd; ++i) {
        double v = seeds(i, m) + (c == 0 ? 0.0 : rng_.uniform(-jitter, jitter));
        if (!angular) v = std::clamp(v, 0.0, 1.0);
        coords(i, col) = v;
      }
      labels.push_back(m);
    }
  }

  std::vector<nn::Matrix*> params;
  nn::collect(model.gate(), params);
  std::vector<const nn::Matrix*> views(params.begin(), params.end());
  const std::vector<double> lr(params.size(), config_.gate_lr);
  AdamState state;

  auto seed_weights = [&] {
    nn::Tape t(false);
    nn::Binding bind(t, views, false);
    const nn::Matrix w = t.value(nn::softmax_rows(t, model.gate_logits_at(bind, seeds)));
    return Eigen::VectorXd(w.diagonal());
  };

  GateReport report;
  for (int step = 1; step <= config_.gate_pretrain_max_steps; ++step) {
    nn::Tape t;
    nn::Binding bind(t, views, true);
    nn::Var loss = nn::softmax_cross_entropy(t, model.gate_logits_at(bind, coords), labels);
    adam_step(params, nn::param_grad(t, bind, loss), state, lr, config_.adam);
    report.steps = step;
    if (step >= config_.gate_pretrain_steps && seed_weights().minCoeff() >= config_.gate_target) break;
  }
  report.seed_weights = seed_weights();
  report.reached_target = report.seed_weights.minCoeff() >= config_.gate_target;
  return report;
}

StageReport Trainer::dd_specialize(nn::MsnnModel& model, GateReport* gate_report) {
  if (config_.dd_epochs < 1) throw ConfigError("dd_epochs must be positive for the mixture stage");
  const int M = model.level_count();
  model.activate_mixture(rng_, config_.dd_perturbation);
  GateReport g = pretrain_gate(model);
  if (gate_report) *gate_report = g;
  const double lr = config_.adam.lr * std::pow(config_.stage_lr_decay, M);
  return optimize(model, "dd", model.finest_eps(), config_.dd_epochs, lr, config_.dd_shared_lr_scale);
}

StageReport Trainer::optimize(nn::MsnnModel& model, const std::string& name, double eps, int epochs, double lr,
                              double shared_scale) {
  const auto t0 = std::chrono::steady_clock::now();
  StageReport report;
  report.name = name;
  report.eps = eps;

  auto refs = model.parameters();
  std::vector<nn::Matrix*> params;
  std::vector<double> rates;
  for (const auto& r : refs) {
    params.push_back(r.value);
    rates.push_back(r.group == nn::ParamGroup::shared ? lr * shared_scale : lr);
  }
  const auto views = model.parameter_views();
  const Mollifier mollifier{eps, model.arch().dim};
  AdamState state;
  double initial = -1.0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double w_aux =
        config_.use_anchors ? aux_weight_schedule(epoch, epochs, config_.w_aux_start, config_.w_aux_floor) : 0.0;
    const LossWeights weights{config_.w_res, config_.w_bc, w_aux};
    EpochRecord rec;
    rec.epoch = epoch;
    rec.w_aux = w_aux;
    rec.lr = lr;
    for (int b = 0; b < config_.batches_per_epoch; ++b) {
      const Batch batch = sample_batch(config_, data_, eps, rng_);
      nn::Tape t;
      nn::Binding bind(t, views, true);
      const LossGraph graph = build_loss(model, bind, coeffs_, batch, mollifier, weights);
      const LossBreakdown v = graph.values(t);
      if (initial < 0.0) initial = v.total;
      if (v.total > config_.divergence_factor * initial) {
        std::ostringstream os;
        os << name << " diverged at epoch " << epoch << " batch " << b << ": total=" << v.total << " (initial " << initial
           << "), res=" << v.res << ", bc=" << v.bc << ", aux=" << v.aux;
        throw DivergenceError(os.str());
      }
      adam_step(params, nn::param_grad(t, bind, graph.total), state, rates, config_.adam);
      rec.loss.res += v.res;
      rec.loss.bc += v.bc;
      rec.loss.aux += v.aux;
      rec.loss.total += v.total;
    }
    const double nb = config_.batches_per_epoch;
    rec.loss.res /= nb;
    rec.loss.bc /= nb;
    rec.loss.aux /= nb;
    rec.loss.total /= nb;
    report.epochs.push_back(rec);
    if (progress_) progress_(report, rec);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_stage_csv(const StageReport& report, std::ostream& os) {
  os << "epoch,L_res,L_bc,L_aux,total,w_aux,lr\n";
  os << std::setprecision(10);
  for (const auto& e : report.epochs)
    os << e.epoch << ',' << e.loss.res << ',' << e.loss.bc << ',' << e.loss.aux << ',' << e.loss.total << ',' << e.w_aux
       << ',' << e.lr << '\n';
}

}  // namespace greenpc::train
