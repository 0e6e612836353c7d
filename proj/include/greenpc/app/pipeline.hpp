#pragma once

#include "greenpc/app/config.hpp"
#include "greenpc/krylov/fgmres.hpp"
#include "greenpc/nn/model.hpp"
#include "greenpc/pde/anchors.hpp"
#include "greenpc/pde/grid.hpp"
#include "greenpc/train/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace greenpc::app {

pde::AnchorSet make_anchors(const ProblemConfig& problem);

struct TrainResult {
  nn::MsnnModel model;
  std::vector<train::StageReport> stages;
  std::optional<train::GateReport> gate;
};

/// Runs every stage of the schedule, then the mixture stage when gate seeds
/// are configured. Writes loss_<stage>.csv and a checkpoint after each stage
/// into `out` (when non-empty); progress lines go to `log`.
TrainResult train_model(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream* log = nullptr);

/// The configured checkpoint, or `out`/checkpoint.gpck.
std::filesystem::path checkpoint_path(const ExperimentConfig& config, const std::filesystem::path& out);
/// Loads the checkpoint and checks that its architecture matches the config.
nn::MsnnModel load_model(const ExperimentConfig& config, const std::filesystem::path& path);

/// G(xs_i, ys_j) for every pair of columns (rows follow xs).
Eigen::MatrixXd eval_kernel_grid(const nn::MsnnModel& model, const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys,
                                 double theta = 0.0);
/// Rows "theta, y..., x..., g" with a header.
void write_kernel_slices(const nn::MsnnModel& model, const OutputConfig& output, std::ostream& os);

/// Stiffness matrix scaled so that its inverse approximates the Green's kernel table.
SparseMatrix system_matrix(const ProblemConfig& problem, const pde::Grid& grid, double theta = 0.0);

struct BuiltPreconditioner {
  Preconditioner kind = Preconditioner::none;
  std::optional<krylov::LinearOperator> op;
  nlohmann::json stats = nlohmann::json::object();
};

/// Discretizes the kernel on the grid nodes in the requested format.
BuiltPreconditioner build_preconditioner(Preconditioner kind, const nn::MsnnModel& model, const pde::Grid& grid,
                                         double theta, const ExperimentConfig& config);

struct RunRecord {
  int n = 0;
  double theta = 0.0;
  Preconditioner preconditioner = Preconditioner::none;
  std::vector<int> iterations;
  std::vector<bool> converged;
  /// Runs stopped by an invariant Krylov space; counted as failures.
  int breakdowns = 0;

  bool all_converged() const;
  double mean() const;
  double stddev() const;
  std::string status() const;
};

struct SuiteResult {
  std::vector<RunRecord> runs;
  nlohmann::json hmatrix_stats = nlohmann::json::array();

  const RunRecord* find(int n, Preconditioner p, double theta = 0.0) const;
};

/// "N,theta,preconditioner,mean_iterations,std_iterations,runs,status".
void write_iterations_csv(const SuiteResult& result, std::ostream& os);

/// Solves every grid size (and parameter value) with every configured
/// preconditioner and right-hand side. Writes iterations.csv, residual
/// histories and hmatrix_stats.json below `out` when it is non-empty.
SuiteResult solve_suite(const ExperimentConfig& config, const nn::MsnnModel& model, const std::filesystem::path& out,
                        std::ostream* log = nullptr);

/// Trains when enabled and no checkpoint exists, then solves and writes kernel slices.
/// Errors are rethrown with the failing stage name prefixed.
SuiteResult run_suite(const ExperimentConfig& config, const std::filesystem::path& out, std::ostream* log = nullptr);

}  // namespace greenpc::app
