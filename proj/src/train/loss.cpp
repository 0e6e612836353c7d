#include "greenpc/train/loss.hpp"

#include "greenpc/error.hpp"

#include <cmath>
#include <sstream>

namespace greenpc::train {

LossBreakdown LossGraph::values(const nn::Tape& t) const {
  return {t.value(res)(0, 0), t.value(bc)(0, 0), t.value(aux)(0, 0), t.value(total)(0, 0)};
}

LossGraph build_loss(const nn::MsnnModel& model, const nn::Binding& bind, const pde::CoefficientField& coeffs,
                     const Batch& batch, const Mollifier& mollifier, const LossWeights& weights) {
  nn::Tape& t = bind.tape();
  const int d = model.arch().dim;
  const nn::JetLayout second{d, 2};
  const nn::JetLayout plain{d, 0};

  const auto& r = batch.residual;
  const Eigen::ArrayXd theta = r.theta.size() > 0 ? Eigen::ArrayXd(r.theta.transpose()) : Eigen::ArrayXd();
  const nn::Matrix C = nn::operator_coefficients(coeffs.sample(r.x, theta), second);
  nn::Var lg = nn::contract_streams(t, model.forward(bind, r, second), C);

  LossGraph g;
  g.res = nn::mean_squared_error(t, lg, mollifier(r.x, r.y));
  g.bc = nn::mean_squared_error(t, model.forward(bind, batch.boundary, plain), nn::Matrix::Zero(1, batch.boundary.size()));
  g.aux = nn::mean_squared_error(t, model.forward(bind, batch.anchors, plain), batch.anchor_values);
  g.total = nn::weighted_sum(t, {{weights.res, g.res}, {weights.bc, g.bc}, {weights.aux, g.aux}});

  const LossBreakdown v = g.values(t);
  if (!std::isfinite(v.total)) {
    std::ostringstream os;
    os << "non-finite loss (res=" << v.res << ", bc=" << v.bc << ", aux=" << v.aux << ")";
    throw NumericError(os.str());
  }
  return g;
}

LossBreakdown total_loss(const nn::MsnnModel& model, const pde::CoefficientField& coeffs, const Batch& batch,
                         const Mollifier& mollifier, const LossWeights& weights) {
  nn::Tape t(false);
  nn::Binding bind(t, model.parameter_views(), false);
  return build_loss(model, bind, coeffs, batch, mollifier, weights).values(t);
}

}  // namespace greenpc::train
