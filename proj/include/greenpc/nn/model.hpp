#pragma once

#include "greenpc/nn/mlp.hpp"
#include "greenpc/pde/coefficients.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace greenpc::nn {

enum class GateInput { source, parameter };

struct Architecture {
  int dim = 1;
  bool parametric = false;  // adds (cos 2 theta, sin 2 theta) channels
  std::vector<double> eps_schedule;
  std::vector<int> level_widths;  // hidden width of the branch bodies, per level
  int branches = 2;               // near + middle
  int body_layers = 3;
  int far_width = 50;
  int far_layers = 3;
  int aux_width = 5;
  int aux_layers = 3;
  int replicas = 0;  // Q; 0 disables the mixture stage
  std::vector<std::vector<double>> gate_seeds;  // y for a source gate, theta for a parameter gate
  GateInput gate_input = GateInput::source;

  int param_channels() const { return parametric ? 2 : 0; }
  int gate_input_dim() const { return gate_input == GateInput::parameter ? param_channels() : dim; }
  int gate_seed_dim() const { return gate_input == GateInput::parameter ? 1 : dim; }
  void validate() const;
};

struct BranchNets {
  Mlp body;   // ((x-y)/eps^beta, y, params) -> 1
  Mlp alpha;  // (y, params) -> raw alpha
  Mlp beta;   // (y, params) -> raw beta; empty for the first branch (beta = 1)
};

struct LevelNets {
  double eps = 1.0;
  std::vector<BranchNets> branches;
};

enum class ParamGroup { shared, finest, gate };

struct ParamRef {
  Matrix* value;
  ParamGroup group;
  std::string name;
};

/// Evaluation points: columns of x and y (dim x B), optional theta (B).
struct Points {
  Matrix x;
  Matrix y;
  Eigen::RowVectorXd theta;

  Eigen::Index size() const { return x.cols(); }
};

/// Effective exponents of one level at a batch of sources (branches x B).
struct Exponents {
  Matrix alpha;
  Matrix beta;
};

class MsnnModel {
public:
  MsnnModel(Architecture arch, Rng& rng);

  const Architecture& arch() const { return arch_; }

  /// Number of trained scales M (including the replicated finest level).
  int level_count() const { return static_cast<int>(levels_.size()) + (gated() ? 1 : 0); }
  bool gated() const { return !replicas_.empty(); }
  double finest_eps() const;

  /// Adds the next level of the epsilon schedule.
  void add_level(Rng& rng);

  /// Replicates the finest level Q times, each parameter scaled by (1 + zeta),
  /// zeta ~ U(-perturbation, perturbation), and creates the gate network.
  void activate_mixture(Rng& rng, double perturbation = 1e-2);

  const std::vector<LevelNets>& levels() const { return levels_; }
  std::vector<LevelNets>& levels() { return levels_; }
  const std::vector<LevelNets>& replicas() const { return replicas_; }
  std::vector<LevelNets>& replicas() { return replicas_; }
  const Mlp& far_field() const { return far_; }
  Mlp& far_field() { return far_; }
  const Mlp& gate() const { return gate_; }
  Mlp& gate() { return gate_; }

  std::vector<ParamRef> parameters();
  std::vector<const Matrix*> parameter_views() const;
  std::size_t parameter_count() const;

  /// Throws NumericError naming the first network holding a non-finite value.
  void check_finite() const;

  /// Jet of the model output: 1 x (streams * B).
  Var forward(const Binding& bind, const Points& pts, const JetLayout& layout) const;
  /// Gate logits (Q x B).
  Var gate_logits(const Binding& bind, const Points& pts) const;
  /// Gate weights (Q x B).
  Matrix gate_weights(const Points& pts) const;

  /// Exponents of a shared level (index < levels().size()) or, with `replica`
  /// set, of that replica of the finest level.
  Exponents effective_exponents(int level, const Points& pts, std::optional<int> replica = {}) const;

  /// Gate network input at gate coordinates (dim x B sources, or 1 x B angles).
  Matrix gate_features(const Matrix& coords) const;
  Var gate_logits_at(const Binding& bind, const Matrix& coords) const;

  /// Parameter channel features for theta.
  Matrix parameter_features(const Eigen::RowVectorXd& theta, Eigen::Index B) const;

private:
  Var level_forward(const LevelNets& level, const Binding& bind, const Points& pts, const Matrix& disp,
                    const Matrix& source_in, const JetLayout& layout) const;
  void exponents(const LevelNets& level, const Binding& bind, const Matrix& source_in, std::vector<Var>& alpha,
                 std::vector<Var>& beta) const;
  LevelNets make_level(double eps, int width, Rng& rng) const;
  Matrix source_input(const Points& pts) const;
  Matrix gate_input(const Points& pts) const;

  Architecture arch_;
  std::vector<LevelNets> levels_;    // shared levels
  std::vector<LevelNets> replicas_;  // finest level copies once gated
  Mlp far_;
  Mlp gate_;
};

// ---- point-wise evaluation ---------------------------------------------------

/// Jets at a batch of points: streams x B (value, gradient, Hessian upper triangle).
Matrix evaluate_jets(const MsnnModel& model, const Points& pts, int order);

Eigen::RowVectorXd evaluate(const MsnnModel& model, const Points& pts);

double eval(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double theta = 0.0);
Eigen::VectorXd grad_x(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double theta = 0.0);
Eigen::MatrixXd hess_x(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double theta = 0.0);

/// Stream coefficients (streams x B) such that sum_s C(s,.) * jet_s = L_x G.
Matrix operator_coefficients(const pde::CoefficientSample& coeffs, const JetLayout& layout);

/// L_x applied to the model, batched.
Eigen::RowVectorXd apply_operator(const MsnnModel& model, const pde::CoefficientField& coeffs, const Points& pts);
double apply_operator(const MsnnModel& model, const pde::CoefficientField& coeffs, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, double theta = 0.0);

/// Softmax gate weights at one source point (and theta).
Eigen::VectorXd gate_eval(const MsnnModel& model, const Eigen::VectorXd& y, double theta = 0.0);

/// (alpha_j, beta_j) per branch at a shared level; the far field is (0, 0).
std::vector<std::pair<double, double>> effective_exponents(const MsnnModel& model, int level,
                                                           const Eigen::VectorXd& y, double theta = 0.0);

/// The far field carries no scaling: (alpha, beta) = (0, 0).
constexpr std::pair<double, double> far_field_exponents() { return {0.0, 0.0}; }

/// Gradient of a scalar loss built on `tape` w.r.t. every bound parameter, in
/// the order of `MsnnModel::parameters()`.
std::vector<Matrix> param_grad(Tape& tape, const Binding& bind, Var loss);

}  // namespace greenpc::nn
