#include "greenpc/nn/model.hpp"

#include "greenpc/error.hpp"

#include <cmath>

namespace greenpc::nn {

void Architecture::validate() const {
  if (dim < 1 || dim > 2) throw ConfigError("model dimension must be 1 or 2");
  if (eps_schedule.empty()) throw ConfigError("empty eps schedule");
  for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
    if (!(eps_schedule[k] > 0.0)) throw ConfigError("eps must be positive");
    if (k > 0 && !(eps_schedule[k] < eps_schedule[k - 1])) throw ConfigError("eps schedule must be strictly decreasing");
  }
  if (level_widths.size() != eps_schedule.size()) throw ConfigError("level_widths must match the eps schedule");
  if (branches < 1) throw ConfigError("at least one branch per level");
  if (body_layers < 1 || far_layers < 1 || aux_layers < 1) throw ConfigError("networks need a hidden layer");
  if (replicas < 0) throw ConfigError("negative replica count");
  if (replicas > 0 && static_cast<int>(gate_seeds.size()) != replicas) throw ConfigError("one gate seed per replica");
  if (gate_input == GateInput::parameter && !parametric) throw ConfigError("parameter gate requires a parametric model");
  for (const auto& s : gate_seeds)
    if (static_cast<int>(s.size()) != gate_seed_dim()) throw ConfigError("gate seed dimension mismatch");
}

MsnnModel::MsnnModel(Architecture arch, Rng& rng) : arch_(std::move(arch)) {
  arch_.validate();
  far_ = Mlp::glorot(2 * arch_.dim + arch_.param_channels(), arch_.far_width, arch_.far_layers, 1, rng);
}

double MsnnModel::finest_eps() const {
  if (gated()) return replicas_.front().eps;
  if (levels_.empty()) throw std::logic_error("model has no levels");
  return levels_.back().eps;
}

LevelNets MsnnModel::make_level(double eps, int width, Rng& rng) const {
  const int d = arch_.dim, pc = arch_.param_channels();
  LevelNets level;
  level.eps = eps;
  for (int j = 0; j < arch_.branches; ++j) {
    BranchNets b;
    b.body = Mlp::glorot(2 * d + pc, width, arch_.body_layers, 1, rng);
    b.alpha = Mlp::glorot(d + pc, arch_.aux_width, arch_.aux_layers, 1, rng);
    b.alpha.weights.back().setZero();
    if (j == 0) b.alpha.biases.back()(0, 0) = 2.0 - d;
    if (j > 0) {
      b.beta = Mlp::glorot(d + pc, arch_.aux_width, arch_.aux_layers, 1, rng);
      b.beta.weights.back().setZero();
    }
    level.branches.push_back(std::move(b));
  }
  return level;
}

void MsnnModel::add_level(Rng& rng) {
  if (gated()) throw std::logic_error("cannot add levels after the mixture stage");
  const std::size_t k = levels_.size();
  if (k >= arch_.eps_schedule.size()) throw ConfigError("eps schedule exhausted");
  levels_.push_back(make_level(arch_.eps_schedule[k], arch_.level_widths[k], rng));
}

void MsnnModel::activate_mixture(Rng& rng, double perturbation) {
  if (gated()) throw std::logic_error("mixture already active");
  if (levels_.empty()) throw std::logic_error("mixture needs a trained level");
  if (arch_.replicas < 1) throw ConfigError("mixture stage requires replicas >= 1");
  LevelNets finest = std::move(levels_.back());
  levels_.pop_back();
  for (int m = 0; m < arch_.replicas; ++m) {
    LevelNets copy = finest;
    for (auto& b : copy.branches)
      for (Mlp* net : {&b.body, &b.alpha, &b.beta})
        for (std::size_t l = 0; l < net->weights.size(); ++l)
          for (Matrix* p : {&net->weights[l], &net->biases[l]})
            for (Eigen::Index i = 0; i < p->size(); ++i)
              p->data()[i] *= 1.0 + rng.uniform(-perturbation, perturbation);
    replicas_.push_back(std::move(copy));
  }
  gate_ = Mlp::glorot(arch_.gate_input_dim(), arch_.aux_width, arch_.aux_layers, arch_.replicas, rng);
}

namespace {

template <class Level, class Fn>
void visit_level(Level& level, const std::string& prefix, Fn&& fn) {
  for (std::size_t j = 0; j < level.branches.size(); ++j) {
    auto& b = level.branches[j];
    const std::string base = prefix + ".branch[" + std::to_string(j) + "]";
    fn(b.body, base + ".body");
    fn(b.alpha, base + ".alpha");
    fn(b.beta, base + ".beta");
  }
}

template <class Model, class Fn>
void visit_nets(Model& m, Fn&& fn) {
  fn(m.far_field(), std::string("far_field"), ParamGroup::shared);
  for (std::size_t k = 0; k < m.levels().size(); ++k) {
    const bool finest = !m.gated() && k + 1 == m.levels().size();
    visit_level(m.levels()[k], "level[" + std::to_string(k) + "]",
                [&](auto& net, const std::string& name) { fn(net, name, finest ? ParamGroup::finest : ParamGroup::shared); });
  }
  for (std::size_t r = 0; r < m.replicas().size(); ++r)
    visit_level(m.replicas()[r], "replica[" + std::to_string(r) + "]",
                [&](auto& net, const std::string& name) { fn(net, name, ParamGroup::finest); });
  if (m.gated()) fn(m.gate(), std::string("gate"), ParamGroup::gate);
}

}  // namespace

std::vector<ParamRef> MsnnModel::parameters() {
  std::vector<ParamRef> out;
  visit_nets(*this, [&](Mlp& net, const std::string& name, ParamGroup g) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      out.push_back({&net.weights[l], g, name + ".W" + std::to_string(l)});
      out.push_back({&net.biases[l], g, name + ".b" + std::to_string(l)});
    }
  });
  return out;
}

std::vector<const Matrix*> MsnnModel::parameter_views() const {
  std::vector<const Matrix*> out;
  visit_nets(*this, [&](const Mlp& net, const std::string&, ParamGroup) { collect(net, out); });
  return out;
}

std::size_t MsnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* p : parameter_views()) n += static_cast<std::size_t>(p->size());
  return n;
}

void MsnnModel::check_finite() const {
  visit_nets(*this, [&](const Mlp& net, const std::string& name, ParamGroup) {
    if (!net.all_finite()) throw NumericError("non-finite parameter in " + name);
  });
}

Matrix MsnnModel::parameter_features(const Eigen::RowVectorXd& theta, Eigen::Index B) const {
  if (!arch_.parametric) return Matrix(0, B);
  if (theta.size() != B) throw ConfigError("parametric model needs one theta per point");
  Matrix f(2, B);
  f.row(0) = (2.0 * theta.array()).cos().matrix();
  f.row(1) = (2.0 * theta.array()).sin().matrix();
  return f;
}

Matrix MsnnModel::source_input(const Points& pts) const {
  const Eigen::Index B = pts.size();
  const int pc = arch_.param_channels();
  Matrix in(arch_.dim + pc, B);
  in.topRows(arch_.dim) = pts.y;
  if (pc > 0) in.bottomRows(pc) = parameter_features(pts.theta, B);
  return in;
}

Matrix MsnnModel::gate_input(const Points& pts) const {
  if (arch_.gate_input == GateInput::parameter) return parameter_features(pts.theta, pts.size());
  return pts.y;
}

Matrix MsnnModel::gate_features(const Matrix& coords) const {
  if (arch_.gate_input == GateInput::parameter) return parameter_features(coords.row(0), coords.cols());
  return coords;
}

Var MsnnModel::gate_logits_at(const Binding& bind, const Matrix& coords) const {
  if (!gated()) throw std::logic_error("gate is not active");
  Tape& t = bind.tape();
  return nn::forward(gate_, bind, t.constant(gate_features(coords)), JetLayout{arch_.dim, 0}, coords.cols());
}

void MsnnModel::exponents(const LevelNets& level, const Binding& bind, const Matrix& source_in,
                          std::vector<Var>& alpha, std::vector<Var>& beta) const {
  Tape& t = bind.tape();
  const Eigen::Index B = source_in.cols();
  const JetLayout plain{arch_.dim, 0};
  Var src = t.constant(source_in);
  for (std::size_t j = 0; j < level.branches.size(); ++j) {
    const BranchNets& br = level.branches[j];
    Var raw_a = nn::forward(br.alpha, bind, src, plain, B);
    if (j == 0) {
      alpha.push_back(raw_a);
      beta.push_back(t.constant(Matrix::Ones(1, B)));
    } else {
      alpha.push_back(add(t, alpha.back(), softplus(t, raw_a)));
      beta.push_back(mul(t, beta.back(), sigmoid(t, nn::forward(br.beta, bind, src, plain, B))));
    }
  }
}

Var MsnnModel::level_forward(const LevelNets& level, const Binding& bind, const Points& pts, const Matrix& disp,
                             const Matrix& source_in, const JetLayout& layout) const {
  Tape& t = bind.tape();
  const Eigen::Index B = pts.size();
  std::vector<Var> alpha, beta;
  exponents(level, bind, source_in, alpha, beta);
  const double lne = std::log(level.eps);
  Var sum;
  for (std::size_t j = 0; j < level.branches.size(); ++j) {
    Var inv = nn::exp(t, scale(t, beta[j], -lne));
    Var amp = nn::exp(t, scale(t, alpha[j], lne));
    Var in = branch_input(t, disp, source_in, inv, layout);
    Var phi = scale_streams(t, nn::forward(level.branches[j].body, bind, in, layout, B), amp, B);
    sum = sum.valid() ? add(t, sum, phi) : phi;
  }
  return sum;
}

Var MsnnModel::forward(const Binding& bind, const Points& pts, const JetLayout& layout) const {
  check_finite();
  Tape& t = bind.tape();
  const Eigen::Index B = pts.size();
  if (pts.x.rows() != arch_.dim || pts.y.rows() != arch_.dim || pts.y.cols() != B)
    throw ConfigError("point batch dimension mismatch");
  if (layout.dim != arch_.dim) throw std::logic_error("jet layout dimension mismatch");
  const Matrix disp = pts.x - pts.y;
  const Matrix source_in = source_input(pts);
  Var total = nn::forward(far_, bind, branch_input(t, pts.x, source_in, t.constant(Matrix::Ones(1, B)), layout),
                          layout, B);
  for (const LevelNets& level : levels_) total = add(t, total, level_forward(level, bind, pts, disp, source_in, layout));
  if (gated()) {
    Var w = softmax_rows(t, gate_logits(bind, pts));
    for (std::size_t m = 0; m < replicas_.size(); ++m) {
      Var part = level_forward(replicas_[m], bind, pts, disp, source_in, layout);
      total = add(t, total, scale_streams(t, part, row(t, w, static_cast<Eigen::Index>(m)), B));
    }
  }
  return total;
}

Var MsnnModel::gate_logits(const Binding& bind, const Points& pts) const {
  if (!gated()) throw std::logic_error("gate is not active");
  Tape& t = bind.tape();
  return nn::forward(gate_, bind, t.constant(gate_input(pts)), JetLayout{arch_.dim, 0}, pts.size());
}

Matrix MsnnModel::gate_weights(const Points& pts) const {
  Tape t(false);
  Binding bind(t, parameter_views(), false);
  return t.value(softmax_rows(t, gate_logits(bind, pts)));
}

Exponents MsnnModel::effective_exponents(int level, const Points& pts, std::optional<int> replica) const {
  const LevelNets* lv = nullptr;
  if (replica) {
    if (!gated() || *replica < 0 || *replica >= static_cast<int>(replicas_.size()))
      throw std::out_of_range("replica index");
    lv = &replicas_[static_cast<std::size_t>(*replica)];
  } else {
    if (level < 0 || level >= static_cast<int>(levels_.size())) throw std::out_of_range("level index");
    lv = &levels_[static_cast<std::size_t>(level)];
  }
  Tape t(false);
  Binding bind(t, parameter_views(), false);
  std::vector<Var> alpha, beta;
  exponents(*lv, bind, source_input(pts), alpha, beta);
  Exponents e{Matrix(alpha.size(), pts.size()), Matrix(beta.size(), pts.size())};
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    e.alpha.row(static_cast<Eigen::Index>(j)) = t.value(alpha[j]);
    e.beta.row(static_cast<Eigen::Index>(j)) = t.value(beta[j]);
  }
  return e;
}

// ---- point-wise evaluation ---------------------------------------------------

namespace {

constexpr Eigen::Index kChunk = 2048;

Points slice(const Points& pts, Eigen::Index start, Eigen::Index count) {
  Points s{pts.x.middleCols(start, count), pts.y.middleCols(start, count), {}};
  if (pts.theta.size() > 0) s.theta = pts.theta.segment(start, count);
  return s;
}

Points single(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double theta, bool parametric) {
  Points p{x, y, {}};
  if (parametric) p.theta = Eigen::RowVectorXd::Constant(1, theta);
  return p;
}

}  // namespace

Matrix evaluate_jets(const MsnnModel& model, const Points& pts, int order) {
  const JetLayout layout{model.arch().dim, order};
  const int S = layout.streams();
  const Eigen::Index n = pts.size();
  Matrix out(S, n);
  const auto views = model.parameter_views();
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index B = std::min(kChunk, n - start);
    Tape t(false);
    Binding bind(t, views, false);
    const Matrix& v = t.value(model.forward(bind, slice(pts, start, B), layout));
    for (int s = 0; s < S; ++s) out.block(s, start, 1, B) = v.middleCols(s * B, B);
  }
  return out;
}

Eigen::RowVectorXd evaluate(const MsnnModel& model, const Points& pts) { return evaluate_jets(model, pts, 0).row(0); }

double eval(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double theta) {
  return evaluate_jets(model, single(x, y, theta, model.arch().parametric), 0)(0, 0);
}

Eigen::VectorXd grad_x(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double theta) {
  const Matrix j = evaluate_jets(model, single(x, y, theta, model.arch().parametric), 1);
  return j.col(0).segment(1, model.arch().dim);
}

Eigen::MatrixXd hess_x(const MsnnModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double theta) {
  const int d = model.arch().dim;
  const JetLayout layout{d, 2};
  const Matrix j = evaluate_jets(model, single(x, y, theta, model.arch().parametric), 2);
  Eigen::MatrixXd H(d, d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) H(p, q) = j(layout.hess_stream(p, q), 0);
  return H;
}

Matrix operator_coefficients(const pde::CoefficientSample& cs, const JetLayout& layout) {
  const int d = layout.dim;
  const Eigen::Index B = cs.c.cols();
  Matrix C = Matrix::Zero(layout.streams(), B);
  C.row(0) = cs.c.matrix();
  if (layout.order >= 1)
    for (int p = 0; p < d; ++p) C.row(layout.grad_stream(p)) = (cs.b.row(p) - cs.div_a.row(p)).matrix();
  if (layout.order >= 2)
    for (int p = 0; p < d; ++p)
      for (int q = p; q < d; ++q) {
        const int s = layout.hess_stream(p, q);
        if (p == q)
          C.row(s) = -cs.a.row(p * d + p).matrix();
        else
          C.row(s) = -(cs.a.row(p * d + q) + cs.a.row(q * d + p)).matrix();
      }
  return C;
}

Eigen::RowVectorXd apply_operator(const MsnnModel& model, const pde::CoefficientField& coeffs, const Points& pts) {
  const JetLayout layout{model.arch().dim, 2};
  const Matrix jets = evaluate_jets(model, pts, 2);
  const auto cs = coeffs.sample(pts.x, pts.theta.size() > 0 ? Eigen::ArrayXd(pts.theta.transpose().array()) : Eigen::ArrayXd());
  const Matrix C = operator_coefficients(cs, layout);
  return jets.cwiseProduct(C).colwise().sum();
}

double apply_operator(const MsnnModel& model, const pde::CoefficientField& coeffs, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, double theta) {
  const JetLayout layout{model.arch().dim, 2};
  const Matrix jets = evaluate_jets(model, single(x, y, theta, model.arch().parametric), 2);
  const auto cs = coeffs.sample(x, Eigen::ArrayXd::Constant(1, theta));
  return jets.cwiseProduct(operator_coefficients(cs, layout)).sum();
}

Eigen::VectorXd gate_eval(const MsnnModel& model, const Eigen::VectorXd& y, double theta) {
  Points p{y, y, {}};
  if (model.arch().parametric) p.theta = Eigen::RowVectorXd::Constant(1, theta);
  return model.gate_weights(p).col(0);
}

std::vector<std::pair<double, double>> effective_exponents(const MsnnModel& model, int level,
                                                           const Eigen::VectorXd& y, double theta) {
  Points p{y, y, {}};
  if (model.arch().parametric) p.theta = Eigen::RowVectorXd::Constant(1, theta);
  const Exponents e = model.effective_exponents(level, p);
  std::vector<std::pair<double, double>> out;
  for (Eigen::Index j = 0; j < e.alpha.rows(); ++j) out.emplace_back(e.alpha(j, 0), e.beta(j, 0));
  return out;
}

std::vector<Matrix> param_grad(Tape& tape, const Binding& bind, Var loss) {
  if (!std::isfinite(tape.value(loss)(0, 0))) throw NumericError("non-finite loss value");
  tape.backward(loss);
  std::vector<Matrix> grads;
  grads.reserve(bind.vars().size());
  for (Var v : bind.vars()) {
    Matrix g = tape.grad(v);
    if (!g.allFinite()) throw NumericError("non-finite parameter gradient");
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace greenpc::nn
