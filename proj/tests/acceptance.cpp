// Acceptance suite: one PASS/FAIL line per criterion.
#include "greenpc/app/config.hpp"
#include "greenpc/app/pipeline.hpp"
#include "greenpc/compress/hmatrix.hpp"
#include "greenpc/compress/sparse_inverse.hpp"
#include "greenpc/error.hpp"
#include "greenpc/krylov/fgmres.hpp"
#include "greenpc/nn/checkpoint.hpp"
#include "greenpc/nn/model.hpp"
#include "greenpc/pde/assemble.hpp"
#include "greenpc/pde/dense_inverse.hpp"
#include "greenpc/pde/expression.hpp"
#include "greenpc/train/trainer.hpp"

#include <CLI11.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

using namespace greenpc;
namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path cache;
  double fraction = 0.25;
  bool long_run = false;
  std::map<std::string, nn::MsnnModel> models;
};

const fs::path kPresets = GREENPC_SOURCE_DIR "/configs/presets";

std::string num(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  return sxy / sxx;
}

app::ExperimentConfig preset(const std::string& name, double fraction) {
  app::ExperimentConfig c = app::load_config(kPresets / (name + ".json"));
  c.training.epoch_fraction = fraction;
  return c;
}

// Trained checkpoint for a preset at the reduced budget, cached across runs.
const nn::MsnnModel& trained(Context& ctx, const app::ExperimentConfig& cfg, const std::string& key) {
  if (auto it = ctx.models.find(key); it != ctx.models.end()) return it->second;
  const fs::path dir = ctx.cache / key;
  const fs::path ck = dir / "checkpoint.gpck";
  if (fs::exists(ck)) {
    nn::Checkpoint loaded = nn::load_checkpoint(ck);
    const auto& e = loaded.extra;
    const bool matches = e.value("experiment", std::string()) == cfg.name &&
                         e.value("seed", std::uint64_t{0}) == cfg.seed &&
                         e.value("epoch_fraction", -1.0) == cfg.training.epoch_fraction &&
                         nn::architecture_to_json(loaded.model.arch()) == nn::architecture_to_json(cfg.model);
    if (matches) return ctx.models.emplace(key, std::move(loaded.model)).first->second;
    std::cerr << "cached checkpoint " << ck << " does not match; retraining" << std::endl;
  }
  std::cerr << "training " << key << " (epoch fraction " << cfg.training.epoch_fraction << ") into " << dir
            << std::endl;
  return ctx.models.emplace(key, app::train_model(cfg, dir, &std::cerr).model).first->second;
}

struct Counts {
  std::vector<int> iterations;
  bool converged = true;
  double mean() const {
    double s = 0;
    for (int i : iterations) s += i;
    return s / static_cast<double>(iterations.size());
  }
  std::string text() const { return converged ? num(mean()) : std::string("F"); }
};

Counts solve_counts(const krylov::LinearOperator& A, const krylov::LinearOperator* M, const std::vector<std::uint64_t>& seeds) {
  Counts c;
  for (std::uint64_t s : seeds) {
    try {
      const auto r = krylov::fgmres(A, M, krylov::make_rhs(A.n, s), {50, 1e-6, 500});
      c.iterations.push_back(r.report.iterations);
      c.converged = c.converged && r.report.converged;
    } catch (const BreakdownError&) {
      c.iterations.push_back(500);
      c.converged = false;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------

Outcome discretization_order(Context&) {
  const auto start = std::chrono::steady_clock::now();
  // u = x (1 - x) exp(x) with a = 2 + sin(x), b = 1 + x, c = 3.
  const auto coeffs = pde::CoefficientField::from_expressions(1, {{pde::Expression::parse("2 + sin(x)")}},
                                                              {pde::Expression::parse("1 + x")},
                                                              pde::Expression::parse("3"));
  auto u = [](double x) { return x * (1 - x) * std::exp(x); };
  auto f = [](double x) {
    const double e = std::exp(x);
    const double du = e * (1 - x - x * x);
    const double d2u = e * (-x * x - 3 * x);
    const double a = 2 + std::sin(x), da = std::cos(x);
    return -(a * d2u + da * du) + (1 + x) * du + 3 * x * (1 - x) * e;
  };
  std::vector<double> lh, le;
  for (int n : {16, 32, 64, 128}) {
    const pde::Grid g = pde::make_grid(1, n);
    const MatrixXd A = pde::assemble(g, coeffs).to_dense();
    VectorXd rhs(n), exact(n);
    for (int i = 0; i < n; ++i) {
      rhs(i) = g.h() * f(g.interior()(0, i));
      exact(i) = u(g.interior()(0, i));
    }
    const VectorXd sol = A.partialPivLu().solve(rhs);
    lh.push_back(std::log(g.h()));
    le.push_back(std::log((sol - exact).cwiseAbs().maxCoeff()));
  }
  const double slope = fit_slope(lh, le);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {slope >= 1.8 && slope <= 2.2 && secs < 1.0,
          "slope " + num(slope) + " in [1.8, 2.2], " + num(secs, 3) + " s < 1 s"};
}

Outcome derivative_oracles(Context&) {
  const auto start = std::chrono::steady_clock::now();
  const app::ExperimentConfig cfg = preset("oned_convection", 1.0);
  Rng rng(11);
  nn::MsnnModel m(cfg.model, rng);
  for (std::size_t k = 0; k < cfg.model.eps_schedule.size(); ++k) m.add_level(rng);
  m.activate_mixture(rng);
  // Random output layers so every exponent and the gate vary with y.
  for (auto& p : m.parameters())
    if (p.value->cols() >= 1 && p.value->norm() == 0.0) p.value->setRandom() *= 0.5;
  const double eps_min = cfg.model.eps_schedule.back();

  auto probe = [&](Rng& r, VectorXd& x, VectorXd& y) {
    y = VectorXd::Constant(1, r.uniform());
    const double scales[] = {1.0, 1e-2, 1e-3, 1e-4};
    const double s = scales[r.index(4)];
    x = VectorXd::Constant(1, std::clamp(y(0) + s * r.uniform(-3, 3), 0.0, 1.0));
  };

  // Richardson-extrapolated central differences with a step tied to the local length scale.
  auto central = [](const std::function<double(double)>& f, double x, double h) {
    const double d1 = (f(x + h) - f(x - h)) / (2 * h);
    const double d2 = (f(x + h / 2) - f(x - h / 2)) / h;
    return (4 * d2 - d1) / 3;
  };
  Rng pr(5);
  double worst_g = 0, worst_h = 0;
  for (int k = 0; k < 60; ++k) {
    VectorXd x, y;
    probe(pr, x, y);
    const double h = 1e-3 * std::max(std::abs(x(0) - y(0)), eps_min);
    auto at = [&](double v) { return VectorXd::Constant(1, v); };
    const double fd_g = central([&](double v) { return nn::eval(m, at(v), y); }, x(0), h);
    const double g = nn::grad_x(m, x, y)(0);
    worst_g = std::max(worst_g, std::abs(g - fd_g) / std::max(std::abs(fd_g), 1e-12));
    const double fd_h = central([&](double v) { return nn::grad_x(m, at(v), y)(0); }, x(0), h);
    const double H = nn::hess_x(m, x, y)(0, 0);
    worst_h = std::max(worst_h, std::abs(H - fd_h) / std::max(std::abs(fd_h), 1e-12));
  }

  // Parameter gradient of G(x, y)^2 at one probe per parameter draw.
  double worst_p = 0;
  auto params = m.parameters();
  const auto views = m.parameter_views();
  Rng qr(7);
  for (int k = 0; k < 50; ++k) {
    VectorXd x, y;
    probe(qr, x, y);
    nn::Points pt{x, y, {}};
    nn::Tape t;
    nn::Binding bind(t, views, true);
    nn::Var out = m.forward(bind, pt, nn::JetLayout{1, 0});
    const auto grads = nn::param_grad(t, bind, nn::mean_squared_error(t, out, MatrixXd::Zero(1, 1)));
    double gmax = 0;
    for (const auto& gm : grads) gmax = std::max(gmax, gm.cwiseAbs().maxCoeff());
    const auto pi = qr.index(params.size());
    nn::Matrix& P = *params[pi].value;
    const auto ei = static_cast<Index>(qr.index(static_cast<std::uint64_t>(P.size())));
    const double p0 = P.data()[ei], step = 1e-6;
    P.data()[ei] = p0 + step;
    const double fp = std::pow(nn::eval(m, x, y), 2);
    P.data()[ei] = p0 - step;
    const double fm = std::pow(nn::eval(m, x, y), 2);
    P.data()[ei] = p0;
    const double fd = (fp - fm) / (2 * step);
    const double a = grads[pi].data()[ei];
    worst_p = std::max(worst_p, std::abs(a - fd) / std::max(std::abs(fd), 1e-3 * gmax));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = worst_g <= 1e-6 && worst_h <= 1e-5 && worst_p <= 1e-6 && secs < 30;
  return {pass, "grad " + num(worst_g, 2) + " <= 1e-6, hess " + num(worst_h, 2) + " <= 1e-5, param " +
                    num(worst_p, 2) + " <= 1e-6, " + num(secs, 3) + " s < 30 s"};
}

SparseMatrix reaction_1d(int n) {
  return pde::assemble(pde::make_grid(1, n), pde::problems::reaction_1d(), pde::Scheme::central);
}

Outcome exact_inverse(Context&) {
  const SparseMatrix A = reaction_1d(256);
  const auto op = krylov::sparse_operator(A);
  const auto M = krylov::dense_operator(pde::dense_inverse(A));
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const Counts pre = solve_counts(op, &M, seeds), none = solve_counts(op, nullptr, seeds);
  const int worst = *std::max_element(pre.iterations.begin(), pre.iterations.end());
  const bool ratio = !none.converged || none.mean() >= 10 * pre.mean();
  return {pre.converged && worst <= 2 && ratio,
          "preconditioned max " + std::to_string(worst) + " <= 2, unpreconditioned " + none.text() + " (>= 10x or F)"};
}

Outcome hmatrix_fidelity(Context&) {
  const auto start = std::chrono::steady_clock::now();
  const int n = 256;
  const pde::Grid grid = pde::make_grid(1, n);
  const SparseMatrix A = reaction_1d(n);
  const MatrixXd Ainv = pde::dense_inverse(A);
  compress::DenseKernel kernel(Ainv, grid.interior());
  compress::HOptions o;
  o.eta = 1.0;
  o.leaf_max = std::min(static_cast<int>(std::lround(std::sqrt(double(n)))), 128);
  o.rank = compress::RankRule::adaptive(1e-3);
  compress::ClusterTree tree(grid.interior(), o.leaf_max);
  auto H = std::make_shared<compress::HMatrix>(compress::build_hmatrix(kernel, tree, o));
  double worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const VectorXd v = krylov::make_rhs(n, 1000 + s);
    const VectorXd ref = Ainv * v;
    worst = std::max(worst, (compress::hmatvec(*H, v) - ref).norm() / ref.norm());
  }
  const auto op = krylov::sparse_operator(A);
  const auto dense = krylov::dense_operator(Ainv);
  const krylov::LinearOperator hop{n, [H](const VectorXd& v, VectorXd& r) { r = compress::hmatvec(*H, v); }};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const Counts cd = solve_counts(op, &dense, seeds), ch = solve_counts(op, &hop, seeds);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = worst <= 1e-2 && ch.converged && cd.converged && ch.mean() <= cd.mean() + 5 && secs < 60;
  return {pass, "matvec rel err " + num(worst, 3) + " <= 1e-2, iterations H " + ch.text() + " vs dense " + cd.text() +
                    " (+5), ratio " + num(H->compression_ratio(), 3) + "x, " + num(secs, 3) + " s < 60 s"};
}

struct TrainedRuns {
  Counts none, dense, hmatrix;
};

TrainedRuns trained_runs(const app::ExperimentConfig& cfg, const nn::MsnnModel& model, int n) {
  const pde::Grid grid = pde::make_grid(1, n);
  const auto A = krylov::sparse_operator(app::system_matrix(cfg.problem, grid));
  const auto dense = app::build_preconditioner(app::Preconditioner::dense, model, grid, 0.0, cfg);
  const auto h = app::build_preconditioner(app::Preconditioner::hmatrix, model, grid, 0.0, cfg);
  const auto& seeds = cfg.solver.rhs_seeds;
  return {solve_counts(A, nullptr, seeds), solve_counts(A, &*dense.op, seeds), solve_counts(A, &*h.op, seeds)};
}

Outcome trained_1d(Context& ctx) {
  bool pass = true;
  std::string detail;
  for (const char* name : {"oned_convection", "oned_reaction"}) {
    const auto cfg = preset(name, ctx.fraction);
    const nn::MsnnModel& model = trained(ctx, cfg, name);
    const TrainedRuns r = trained_runs(cfg, model, 256);
    const bool a = r.dense.converged && (!r.none.converged || r.none.mean() >= 4 * r.dense.mean());
    const bool b = r.dense.converged && r.hmatrix.converged && r.hmatrix.mean() <= 2 * r.dense.mean();
    pass = pass && a && b;
    detail += std::string(detail.empty() ? "" : "; ") + name + " N=256: none " + r.none.text() + ", dense " +
              r.dense.text() + ", H " + r.hmatrix.text() + (a ? "" : " [(a) fails]") + (b ? "" : " [(b) fails]");
  }
  return {pass, detail + " (epoch fraction " + num(ctx.fraction) + ")"};
}

Outcome scalability(Context& ctx) {
  const auto cfg = preset("oned_convection", ctx.fraction);
  const nn::MsnnModel& model = trained(ctx, cfg, "oned_convection");
  std::vector<Counts> dense, none;
  std::string detail;
  for (int n : {64, 256, 1024}) {
    const pde::Grid grid = pde::make_grid(1, n);
    const auto A = krylov::sparse_operator(app::system_matrix(cfg.problem, grid));
    const auto M = app::build_preconditioner(app::Preconditioner::dense, model, grid, 0.0, cfg);
    dense.push_back(solve_counts(A, &*M.op, cfg.solver.rhs_seeds));
    none.push_back(solve_counts(A, nullptr, cfg.solver.rhs_seeds));
    detail += "N=" + std::to_string(n) + ": dense " + dense.back().text() + ", none " + none.back().text() + "; ";
  }
  bool dense_ok = std::all_of(dense.begin(), dense.end(), [](const Counts& c) { return c.converged; });
  double lo = INFINITY, hi = 0;
  for (const auto& c : dense) lo = std::min(lo, c.mean()), hi = std::max(hi, c.mean());
  dense_ok = dense_ok && hi <= 2 * lo;
  auto value = [](const Counts& c) { return c.converged ? c.mean() : INFINITY; };
  bool monotone = true;
  for (std::size_t i = 1; i < none.size(); ++i) monotone = monotone && value(none[i]) >= value(none[i - 1]);
  const bool growth = monotone && value(none.back()) >= 4 * value(none.front());
  return {dense_ok && growth, detail + "dense spread " + num(hi / lo, 3) + " <= 2, unpreconditioned growth " +
                                  (none.back().converged ? num(value(none.back()) / value(none.front()), 3) : "F") +
                                  " (monotone >= 4x or F)"};
}

Outcome compression_ratio(Context& ctx) {
  const auto cfg = preset("oned_convection", ctx.fraction);
  const nn::MsnnModel& model = trained(ctx, cfg, "oned_convection");
  const auto pc = app::build_preconditioner(app::Preconditioner::hmatrix, model, pde::make_grid(1, 2048), 0.0, cfg);
  const double ratio = pc.stats.at("compression_ratio").get<double>();
  return {ratio >= 30.0, "dense/H storage " + num(ratio, 4) + "x >= 30x at N=2048 (leaf " +
                             std::to_string(cfg.compression.leaf_size(2048)) + ", rank 3->1, eta 1.0)"};
}

Outcome anchor_ablation(Context& ctx) {
  app::ExperimentConfig with = preset("anchor_ablation", 1.0);
  app::ExperimentConfig without = with;
  without.training.config.use_anchors = false;
  without.name = with.name + "_residual_only";
  const nn::MsnnModel& ma = trained(ctx, with, "anchor_ablation");
  const nn::MsnnModel& mr = trained(ctx, without, "anchor_ablation_residual_only");

  // Coarse dense inverse on the anchor grid, interpolated linearly to y = 0.65.
  const int m = with.problem.anchor_grid;
  const pde::Grid coarse = pde::make_grid(1, m);
  pde::AssemblyOptions o;
  o.scheme = with.problem.scheme;
  const MatrixXd Ginv = pde::dense_inverse(pde::assemble(coarse, with.problem.field(), o));
  const double y = 0.65, pos = y / coarse.h() - 1.0;
  const int j = static_cast<int>(std::floor(pos));
  const double t = pos - j;
  const VectorXd ref = (1 - t) * Ginv.col(j) + t * Ginv.col(j + 1);
  const VectorXd yv = VectorXd::Constant(1, y);
  const VectorXd ga = app::eval_kernel_grid(ma, coarse.interior(), yv), gr = app::eval_kernel_grid(mr, coarse.interior(), yv);
  const double da = (ga - ref).cwiseAbs().maxCoeff(), dr = (gr - ref).cwiseAbs().maxCoeff();
  return {da < dr, "max deviation at y=0.65: anchored " + num(da, 4) + " vs residual-only " + num(dr, 4) + " (anchored must be smaller)" +
                       ", reference scale " + num(ref.cwiseAbs().maxCoeff(), 4)};
}

Outcome softmax_gate(Context& ctx) {
  const auto cfg = preset("oned_convection", ctx.fraction);
  Rng rng(3);
  nn::MsnnModel fresh(cfg.model, rng);
  for (std::size_t k = 0; k < cfg.model.eps_schedule.size(); ++k) fresh.add_level(rng);
  fresh.activate_mixture(rng);
  train::TrainConfig tc = cfg.training.scaled();
  Rng drng(4);
  train::Trainer trainer(cfg.problem.field(),
                         train::make_training_data(app::make_anchors(cfg.problem), tc.anchor_pool, false, drng), tc);
  const train::GateReport g = trainer.pretrain_gate(fresh);

  const nn::MsnnModel& model = trained(ctx, cfg, "oned_convection");
  double worst = 0;
  Rng yr(8);
  nn::Matrix ys(1, 1000);
  for (Index i = 0; i < 1000; ++i) ys(0, i) = yr.uniform();
  for (const nn::MsnnModel* mm : std::vector<const nn::MsnnModel*>{&fresh, &model}) {
    const nn::Matrix w = mm->gate_weights(nn::Points{ys, ys, {}});
    worst = std::max(worst, (w.colwise().sum().array() - 1.0).abs().maxCoeff());
  }
  const double seed_min = g.seed_weights.minCoeff();
  return {worst <= 1e-12 && seed_min >= 0.9, "partition of unity error " + num(worst, 3) +
                                                  " <= 1e-12, seed weights after pretraining min " + num(seed_min, 4) +
                                                  " >= 0.9 (" + std::to_string(g.steps) + " steps)"};
}

Outcome sparse_path(Context&) {
  const int n = 256;
  const pde::Grid grid = pde::make_grid(1, n);
  const double h = grid.h(), r = 10 * h;
  const int p = 9;
  const MatrixXd& pts = grid.interior();
  compress::FunctionKernel gauss(pts, [h](const VectorXd& x, const VectorXd& y) {
    return std::exp(-(x - y).squaredNorm() / (4 * h * h));
  });
  compress::FunctionKernel green(pts, [](const VectorXd& x, const VectorXd& y) {
    return std::min(x(0), y(0)) * (1 - std::max(x(0), y(0)));
  });
  auto decide = [&](const compress::KernelSource& k) {
    return compress::choose_format(compress::decay_ratio(k, r), compress::locality_threshold(k), 16.0 * n * p,
                                   8.0 * n * n, 64.0 * n * n)
        .format;
  };
  const auto fg = decide(gauss), fp = decide(green);
  const SparseMatrix S = compress::build_sparse(gauss, r, p);

  // Oracle: per row, keep the p largest |G| within radius r (ties to the smaller column), summed in column order.
  const MatrixXd G = gauss.dense();
  bool exact = true;
  for (std::uint64_t s = 0; s < 5 && exact; ++s) {
    const VectorXd v = krylov::make_rhs(n, 40 + s);
    const VectorXd got = S * v;
    for (Index i = 0; i < n; ++i) {
      std::vector<Index> cand;
      for (Index j = 0; j < n; ++j)
        if (std::abs(pts(0, i) - pts(0, j)) <= r) cand.push_back(j);
      std::stable_sort(cand.begin(), cand.end(), [&](Index a, Index b) { return std::abs(G(i, a)) > std::abs(G(i, b)); });
      cand.resize(std::min<std::size_t>(cand.size(), p));
      std::sort(cand.begin(), cand.end());
      double acc = 0.0;
      for (Index j : cand) acc += G(i, j) * v(j);
      exact = exact && acc == got(i);
    }
  }
  const bool pass = fg == compress::Format::sparse && fp == compress::Format::hmatrix && exact;
  return {pass, std::string("Gaussian -> ") + compress::to_string(fg) + ", Poisson Green's -> " +
                    compress::to_string(fp) + ", sparse matvec " + (exact ? "bitwise equal" : "differs") +
                    " to the top-p oracle"};
}

Outcome long_suites(Context& ctx) {
  bool pass = true;
  std::string detail;
  for (const char* name : {"twod_convection", "twod_reaction", "rotated_laplacian"}) {
    app::ExperimentConfig cfg = preset(name, ctx.fraction);
    cfg.problem.grid_sizes = {32, 48};
    if (cfg.problem.parametric())
      cfg.problem.solve_params = {0.0, std::numbers::pi / 8, 3 * std::numbers::pi / 8, 5 * std::numbers::pi / 8};
    const nn::MsnnModel& model = trained(ctx, cfg, name);
    const app::SuiteResult res = app::solve_suite(cfg, model, ctx.cache / name / "suite_small", &std::cerr);
    int cases = 0, good = 0;
    for (const auto& run : res.runs) {
      if (run.preconditioner != app::Preconditioner::none || run.all_converged()) continue;
      ++cases;
      const auto* d = res.find(run.n, app::Preconditioner::dense, run.theta);
      const auto* hm = res.find(run.n, app::Preconditioner::hmatrix, run.theta);
      if (d && hm && d->all_converged() && hm->all_converged()) ++good;
    }
    pass = pass && good == cases;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": " + std::to_string(good) + "/" +
              std::to_string(cases) + " unpreconditioned failures rescued";
  }
  return {pass, detail};
}

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome(Context&)> run;
  bool long_only = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"acceptance criteria"};
  Context ctx;
  std::string cache = GREENPC_BINARY_DIR "/acceptance_cache";
  std::vector<int> only;
  cli.add_option("--cache", cache, "directory holding trained checkpoints");
  cli.add_option("--epoch-fraction", ctx.fraction, "training budget for the trained-model criteria");
  cli.add_flag("--long", ctx.long_run, "include the 2D and parametric suites");
  cli.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(cli, argc, argv);
  ctx.cache = cache;

  const std::vector<Criterion> criteria{
      {1, "discretization order", discretization_order},
      {2, "derivative oracles", derivative_oracles},
      {3, "exact-inverse sanity", exact_inverse},
      {4, "H-matrix fidelity", hmatrix_fidelity},
      {5, "trained 1D preconditioner", trained_1d},
      {6, "scalability trend", scalability},
      {7, "compression ratio", compression_ratio},
      {8, "anchor ablation", anchor_ablation},
      {9, "softmax gate", softmax_gate},
      {10, "sparse path", sparse_path},
      {11, "2D and parametric suites", long_suites, true},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    if (c.long_only && !ctx.long_run) {
      std::cout << "[SKIP] " << c.id << " " << c.title << ": long-running, enable with --long" << std::endl;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": " << o.detail << " ["
              << num(secs, 3) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
