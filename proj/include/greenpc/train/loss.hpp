#pragma once

#include "greenpc/nn/model.hpp"
#include "greenpc/pde/coefficients.hpp"
#include "greenpc/train/mollifier.hpp"
#include "greenpc/train/sampling.hpp"

namespace greenpc::train {

struct LossWeights {
  double res = 1.0;
  double bc = 1.0;
  double aux = 1.0;
};

struct LossBreakdown {
  double res = 0.0;
  double bc = 0.0;
  double aux = 0.0;
  double total = 0.0;
};

struct LossGraph {
  nn::Var res, bc, aux, total;

  LossBreakdown values(const nn::Tape& t) const;
};

/// w_res * mean (L G - N_eps)^2 + w_bc * mean G^2 on the boundary + w_aux * mean (G - g*)^2.
LossGraph build_loss(const nn::MsnnModel& model, const nn::Binding& bind, const pde::CoefficientField& coeffs,
                     const Batch& batch, const Mollifier& mollifier, const LossWeights& weights);

LossBreakdown total_loss(const nn::MsnnModel& model, const pde::CoefficientField& coeffs, const Batch& batch,
                         const Mollifier& mollifier, const LossWeights& weights);

}  // namespace greenpc::train
