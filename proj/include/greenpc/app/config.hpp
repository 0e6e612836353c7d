#pragma once

#include "greenpc/compress/hmatrix.hpp"
#include "greenpc/nn/model.hpp"
#include "greenpc/pde/assemble.hpp"
#include "greenpc/pde/coefficients.hpp"
#include "greenpc/train/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace greenpc::app {

struct ProblemConfig {
  int dim = 1;
  /// Coefficient expressions over x1, x2 (or x) and theta.
  std::vector<std::vector<std::string>> a;
  std::vector<std::string> b;
  std::string c = "0";
  std::map<std::string, double> constants;
  pde::Scheme scheme = pde::Scheme::central;
  std::vector<int> grid_sizes;
  int anchor_grid = 34;
  /// Parameter values carried by the anchors (parametric problems only).
  std::vector<double> anchor_params;
  /// Parameter values the solver sweeps over (parametric problems only).
  std::vector<double> solve_params;

  pde::CoefficientField field() const;
  bool parametric() const { return !anchor_params.empty(); }
};

struct TrainingSection {
  bool enabled = true;
  train::TrainConfig config;
  /// Scales every epoch count; 1.0 is the full budget.
  double epoch_fraction = 1.0;

  /// `config` with the epoch counts scaled (at least one epoch per stage).
  train::TrainConfig scaled() const;
};

enum class LeafRule { sqrt_capped, tiered, fixed };
enum class RankKind { fixed, log_scaled, adaptive };
enum class FormatChoice { automatic, sparse, hmatrix };

struct CompressionConfig {
  FormatChoice format = FormatChoice::hmatrix;
  double eta = 1.0;
  compress::Distance distance = compress::Distance::box;
  compress::Pivots pivots = compress::Pivots::nearest;

  LeafRule leaf = LeafRule::sqrt_capped;
  int leaf_cap = 128;        // sqrt_capped: min(sqrt N, cap)
  int leaf_small = 64;       // tiered: small for N <= threshold, else large
  int leaf_large = 128;
  int leaf_threshold = 64;
  int leaf_fixed = 32;

  RankKind rank = RankKind::fixed;
  int rank_initial = 3;      // fixed: sample rank, then truncate to rank_final
  int rank_final = 1;
  int rank_small = 10;       // log_scaled: base rank by problem size
  int rank_large = 20;
  int rank_threshold = 64;
  double rank_tau = 1e-3;    // adaptive

  double validation_tau = 0.1;
  int validation_samples = 1000;
  /// Bytes; unset means four times the dense storage of the anchor grid.
  std::optional<double> memory_budget;

  double locality_radius = 10.0;  // in grid spacings
  int locality_p = 0;             // 0 means 3^dim * 3
  double locality_tau = 1e-3;

  int leaf_size(int n_per_axis) const;
  compress::RankRule rank_rule(int n_per_axis) const;
  double budget_bytes(int dim, int anchor_grid) const;
  int sparse_p(int dim) const;
};

enum class Preconditioner { none, dense, hmatrix, sparse, automatic };

struct SolverConfig {
  int restart = 50;
  double tol = 1e-6;
  int max_iterations = 500;
  std::vector<std::uint64_t> rhs_seeds{101, 202, 303};
  std::vector<Preconditioner> preconditioners{Preconditioner::none, Preconditioner::dense, Preconditioner::hmatrix};
  /// Largest kernel table assembled for the dense path, in bytes.
  double dense_cap_bytes = 2.0 * 1024 * 1024 * 1024;
};

struct OutputConfig {
  /// Sources at which kernel slices are written after training.
  std::vector<std::vector<double>> slice_sources;
  std::vector<double> slice_params;
  int slice_grid = 64;
};

struct ExperimentConfig {
  std::string name;
  ProblemConfig problem;
  nn::Architecture model;
  TrainingSection training;
  CompressionConfig compression;
  SolverConfig solver;
  OutputConfig output;
  std::filesystem::path output_dir = "out";
  /// Existing checkpoint; relative paths resolve against the config file.
  std::filesystem::path checkpoint;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Throws SchemaError on unknown keys or mistyped values and ConfigError on
/// out-of-range settings.
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(Preconditioner p);
Preconditioner preconditioner_from_string(const std::string& s);

}  // namespace greenpc::app
