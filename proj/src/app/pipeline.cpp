#include "greenpc/app/pipeline.hpp"

#include "greenpc/compress/hmatrix.hpp"
#include "greenpc/compress/sparse_inverse.hpp"
#include "greenpc/error.hpp"
#include "greenpc/nn/checkpoint.hpp"
#include "greenpc/pde/assemble.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

namespace greenpc::app {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// Re-throws the current exception with the stage name attached, keeping its type.
[[noreturn]] void rethrow_in_stage(const std::string& stage) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(stage + ": " + e.what());
  } catch (const BudgetError& e) {
    throw BudgetError(stage + ": " + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(stage + ": " + e.what());
  } catch (const BreakdownError& e) {
    throw BreakdownError(stage + ": " + e.what());
  } catch (const SizeError& e) {
    throw SizeError(stage + ": " + e.what());
  } catch (const FactorizationError& e) {
    throw FactorizationError(stage + ": " + e.what());
  } catch (const Error& e) {
    throw Error(stage + ": " + e.what());
  }
}

}  // namespace

pde::AnchorSet make_anchors(const ProblemConfig& problem) {
  return pde::generate_anchors(problem.field(), problem.anchor_grid, problem.scheme, problem.anchor_params);
}

fs::path checkpoint_path(const ExperimentConfig& config, const fs::path& out) {
  return config.checkpoint.empty() ? out / "checkpoint.gpck" : config.checkpoint;
}

TrainResult train_model(const ExperimentConfig& config, const fs::path& out, std::ostream* log) {
  config.validate();
  const train::TrainConfig tc = config.training.scaled();
  Rng rng(config.seed);
  const pde::AnchorSet anchors = make_anchors(config.problem);
  train::TrainingData data = train::make_training_data(anchors, tc.anchor_pool, config.problem.parametric(), rng);
  TrainResult result{nn::MsnnModel(config.model, rng), {}, std::nullopt};
  train::Trainer trainer(config.problem.field(), std::move(data), tc);
  if (log) {
    trainer.set_progress([log](const train::StageReport& s, const train::EpochRecord& e) {
      if (e.epoch % 10 != 0) return;
      *log << s.name << " eps=" << s.eps << " epoch " << e.epoch << " total=" << fmt(e.loss.total)
           << " res=" << fmt(e.loss.res) << " bc=" << fmt(e.loss.bc) << " aux=" << fmt(e.loss.aux)
           << " w_aux=" << fmt(e.w_aux) << std::endl;
    });
  }

  auto finish_stage = [&](const train::StageReport& report) {
    result.stages.push_back(report);
    if (log) *log << report.name << " finished in " << fmt(report.seconds) << " s" << std::endl;
    if (out.empty()) return;
    auto os = open_out(out / ("loss_" + report.name + ".csv"));
    train::write_stage_csv(report, os);
    nn::save_checkpoint(result.model, out / ("checkpoint_" + report.name + ".gpck"),
                        {{"experiment", config.name}, {"stage", report.name}});
  };

  for (std::size_t k = 0; k < config.model.eps_schedule.size(); ++k) finish_stage(trainer.train_stage(result.model));
  if (config.model.replicas > 0 && tc.dd_epochs > 0) {
    train::GateReport gate;
    const train::StageReport dd = trainer.dd_specialize(result.model, &gate);
    result.gate = gate;
    if (log)
      *log << "gate pretraining: " << gate.steps << " steps, min seed weight " << fmt(gate.seed_weights.minCoeff())
           << std::endl;
    finish_stage(dd);
  }
  if (!out.empty()) {
    nlohmann::json seconds = nlohmann::json::object();
    for (const auto& s : result.stages) seconds[s.name] = s.seconds;
    nn::save_checkpoint(result.model, out / "checkpoint.gpck",
                        {{"experiment", config.name},
                         {"seed", config.seed},
                         {"epoch_fraction", config.training.epoch_fraction},
                         {"stage_seconds", seconds}});
  }
  return result;
}

nn::MsnnModel load_model(const ExperimentConfig& config, const fs::path& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  if (nn::architecture_to_json(ck.model.arch()) != nn::architecture_to_json(config.model))
    throw SchemaError("checkpoint architecture does not match the configured model");
  return std::move(ck.model);
}

MatrixXd eval_kernel_grid(const nn::MsnnModel& model, const MatrixXd& xs, const MatrixXd& ys, double theta) {
  if (xs.rows() != model.arch().dim || ys.rows() != model.arch().dim)
    throw SchemaError("evaluation points do not match the model dimension");
  const Index nx = xs.cols(), ny = ys.cols();
  MatrixXd table(nx, ny);
  // One source column at a time bounds the temporary point batch.
  const Index per_chunk = std::max<Index>(1, (Index{1} << 20) / std::max<Index>(nx, 1));
  for (Index c0 = 0; c0 < ny; c0 += per_chunk) {
    const Index nc = std::min(per_chunk, ny - c0);
    nn::Points pts{MatrixXd(xs.rows(), nx * nc), MatrixXd(xs.rows(), nx * nc), {}};
    for (Index c = 0; c < nc; ++c) {
      pts.x.middleCols(c * nx, nx) = xs;
      pts.y.middleCols(c * nx, nx) = ys.col(c0 + c).replicate(1, nx);
    }
    if (model.arch().parametric) pts.theta = Eigen::RowVectorXd::Constant(nx * nc, theta);
    const Eigen::RowVectorXd v = nn::evaluate(model, pts);
    table.middleCols(c0, nc) = Eigen::Map<const MatrixXd>(v.data(), nx, nc);
  }
  return table;
}

void write_kernel_slices(const nn::MsnnModel& model, const OutputConfig& output, std::ostream& os) {
  const int dim = model.arch().dim;
  const pde::Grid grid = pde::make_grid(dim, output.slice_grid);
  const std::vector<double> thetas = output.slice_params.empty() ? std::vector<double>{0.0} : output.slice_params;
  os << "theta";
  for (int d = 0; d < dim; ++d) os << ",y" << d + 1;
  for (int d = 0; d < dim; ++d) os << ",x" << d + 1;
  os << ",g\n" << std::setprecision(12);
  for (double theta : thetas) {
    for (const auto& src : output.slice_sources) {
      if (static_cast<int>(src.size()) != dim) throw SchemaError("slice source has the wrong dimension");
      const VectorXd y = Eigen::Map<const VectorXd>(src.data(), dim);
      const MatrixXd g = eval_kernel_grid(model, grid.interior(), y, theta);
      for (Index i = 0; i < grid.size(); ++i) {
        os << theta;
        for (int d = 0; d < dim; ++d) os << ',' << y(d);
        for (int d = 0; d < dim; ++d) os << ',' << grid.interior()(d, i);
        os << ',' << g(i, 0) << '\n';
      }
    }
  }
}

SparseMatrix system_matrix(const ProblemConfig& problem, const pde::Grid& grid, double theta) {
  pde::AssemblyOptions o;
  o.scheme = problem.scheme;
  o.theta = theta;
  o.volume_scaling = true;
  return pde::assemble(grid, problem.field(), o);
}

BuiltPreconditioner build_preconditioner(Preconditioner kind, const nn::MsnnModel& model, const pde::Grid& grid,
                                         double theta, const ExperimentConfig& config) {
  BuiltPreconditioner out;
  out.kind = kind;
  if (kind == Preconditioner::none) return out;

  const auto& cc = config.compression;
  const Index n = grid.size();
  compress::NetworkKernel kernel(model, grid.interior(), theta);
  const double dense_bytes = 8.0 * static_cast<double>(n) * static_cast<double>(n);

  if (kind == Preconditioner::dense && dense_bytes > config.solver.dense_cap_bytes) {
    out.stats["forced_from_dense"] = true;
    kind = Preconditioner::hmatrix;
  }

  auto build_h = [&]() {
    const int leaf = cc.leaf_size(grid.n());
    compress::HOptions o;
    o.eta = cc.eta;
    o.distance = cc.distance;
    o.leaf_max = leaf;
    o.rank = cc.rank_rule(grid.n());
    o.memory_budget = cc.budget_bytes(grid.dim(), config.problem.anchor_grid);
    o.seed = config.seed;
    compress::ClusterTree tree(grid.interior(), leaf);
    return std::make_shared<const compress::HMatrix>(compress::build_hmatrix(kernel, tree, o));
  };
  auto use_h = [&](std::shared_ptr<const compress::HMatrix> H) {
    const compress::Validation v = compress::validate_hmatrix(*H, kernel, cc.validation_samples, cc.validation_tau,
                                                              config.seed);
    nlohmann::json s = H->stats();
    s["eps_H"] = v.mean_relative_error;
    s["accepted"] = v.accepted;
    s["samples"] = v.samples;
    out.stats.update(s);
    out.kind = Preconditioner::hmatrix;
    out.op = krylov::LinearOperator{n, [H](const VectorXd& v, VectorXd& r) { r = compress::hmatvec(*H, v); }};
  };
  auto use_sparse = [&]() {
    auto S = std::make_shared<const SparseMatrix>(
        compress::build_sparse(kernel, cc.locality_radius * grid.h(), cc.sparse_p(grid.dim())));
    out.stats["format"] = "sparse";
    out.stats["nonzeros"] = S->nonzeros();
    out.stats["memory_bytes"] = S->memory_bytes();
    out.kind = Preconditioner::sparse;
    out.op = krylov::sparse_operator(S);
  };

  switch (kind) {
    case Preconditioner::dense: {
      out.stats["format"] = "dense";
      out.stats["memory_bytes"] = dense_bytes;
      out.op = krylov::dense_operator(eval_kernel_grid(model, grid.interior(), grid.interior(), theta));
      break;
    }
    case Preconditioner::hmatrix:
      use_h(build_h());
      break;
    case Preconditioner::sparse:
      use_sparse();
      break;
    case Preconditioner::automatic: {
      const VectorXd rho = compress::decay_ratio(kernel, cc.locality_radius * grid.h());
      const double tau = compress::locality_threshold(kernel, cc.locality_tau);
      std::shared_ptr<const compress::HMatrix> H;
      double h_bytes = INFINITY;
      try {
        H = build_h();
        h_bytes = H->memory_bytes();
      } catch (const BudgetError&) {
      }
      const double sparse_bytes = static_cast<double>(n) * cc.sparse_p(grid.dim()) * 16.0;
      const auto decision =
          compress::choose_format(rho, tau, sparse_bytes, h_bytes, cc.budget_bytes(grid.dim(), config.problem.anchor_grid));
      out.stats["chooser"] = {{"format", compress::to_string(decision.format)},
                              {"local", decision.local},
                              {"fallback", decision.fallback},
                              {"max_decay_ratio", rho.maxCoeff()},
                              {"threshold", tau}};
      if (decision.format == compress::Format::sparse)
        use_sparse();
      else
        use_h(H);
      break;
    }
    case Preconditioner::none:
      break;
  }
  return out;
}

bool RunRecord::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

double RunRecord::mean() const {
  if (iterations.empty()) return 0.0;
  return std::accumulate(iterations.begin(), iterations.end(), 0.0) / static_cast<double>(iterations.size());
}

double RunRecord::stddev() const {
  if (iterations.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (int it : iterations) s += (it - m) * (it - m);
  return std::sqrt(s / static_cast<double>(iterations.size()));
}

std::string RunRecord::status() const { return all_converged() ? "ok" : "F"; }

const RunRecord* SuiteResult::find(int n, Preconditioner p, double theta) const {
  for (const auto& r : runs)
    if (r.n == n && r.preconditioner == p && r.theta == theta) return &r;
  return nullptr;
}

void write_iterations_csv(const SuiteResult& result, std::ostream& os) {
  os << "N,theta,preconditioner,mean_iterations,std_iterations,runs,status\n" << std::setprecision(10);
  for (const auto& r : result.runs) {
    os << r.n << ',' << r.theta << ',' << to_string(r.preconditioner) << ',';
    if (r.all_converged())
      os << r.mean() << ',' << r.stddev();
    else
      os << "F,F";
    os << ',' << r.iterations.size() << ',' << r.status() << '\n';
  }
}

SuiteResult solve_suite(const ExperimentConfig& config, const nn::MsnnModel& model, const fs::path& out,
                        std::ostream* log) {
  SuiteResult result;
  const auto& sc = config.solver;
  const krylov::SolveOptions opts{sc.restart, sc.tol, sc.max_iterations};
  const std::vector<double> thetas =
      config.problem.parametric() ? config.problem.solve_params : std::vector<double>{0.0};

  for (int n : config.problem.grid_sizes) {
    const pde::Grid grid = pde::make_grid(config.problem.dim, n);
    for (double theta : thetas) {
      const krylov::LinearOperator A = krylov::sparse_operator(system_matrix(config.problem, grid, theta));
      for (Preconditioner kind : sc.preconditioners) {
        const BuiltPreconditioner pc = build_preconditioner(kind, model, grid, theta, config);
        if (pc.kind == Preconditioner::hmatrix || pc.kind == Preconditioner::sparse)
          result.hmatrix_stats.push_back({{"N", n}, {"theta", theta}, {"stats", pc.stats}});
        RunRecord rec;
        rec.n = n;
        rec.theta = theta;
        rec.preconditioner = kind;
        for (std::uint64_t seed : sc.rhs_seeds) {
          const VectorXd b = krylov::make_rhs(grid.size(), seed);
          krylov::SolveResult sol;
          try {
            sol = krylov::fgmres(A, pc.op ? &*pc.op : nullptr, b, opts);
          } catch (const BreakdownError& e) {
            if (log) *log << "N=" << n << " " << to_string(kind) << " seed " << seed << ": " << e.what() << std::endl;
            ++rec.breakdowns;
            rec.iterations.push_back(opts.max_iterations);
            rec.converged.push_back(false);
            continue;
          }
          rec.iterations.push_back(sol.report.iterations);
          rec.converged.push_back(sol.report.converged);
          if (!out.empty()) {
            std::ostringstream name;
            name << "N" << n << "_theta" << theta << "_" << to_string(kind) << "_seed" << seed << ".csv";
            auto os = open_out(out / "residuals" / name.str());
            krylov::write_history_csv(sol.report, os);
          }
        }
        if (log)
          *log << "N=" << n << " theta=" << theta << " " << to_string(kind) << ": "
               << (rec.all_converged() ? fmt(rec.mean()) + " +- " + fmt(rec.stddev()) : std::string("F")) << std::endl;
        result.runs.push_back(std::move(rec));
      }
    }
  }
  if (!out.empty()) {
    auto os = open_out(out / "iterations.csv");
    write_iterations_csv(result, os);
    auto js = open_out(out / "hmatrix_stats.json");
    js << result.hmatrix_stats.dump(2) << '\n';
  }
  return result;
}

SuiteResult run_suite(const ExperimentConfig& config, const fs::path& out, std::ostream* log) {
  std::string stage = "train";
  try {
    const fs::path ck = checkpoint_path(config, out);
    std::optional<nn::MsnnModel> model;
    if (fs::exists(ck)) {
      stage = "load";
      model.emplace(load_model(config, ck));
    } else if (config.training.enabled) {
      model.emplace(train_model(config, out, log).model);
    } else {
      throw ConfigError("no checkpoint at " + ck.string() + " and training is disabled");
    }
    stage = "kernel_slices";
    if (!config.output.slice_sources.empty() && !out.empty()) {
      auto os = open_out(out / "kernel_slices.csv");
      write_kernel_slices(*model, config.output, os);
    }
    stage = "solve";
    return solve_suite(config, *model, out, log);
  } catch (const Error&) {
    rethrow_in_stage(stage);
  }
}

}  // namespace greenpc::app
