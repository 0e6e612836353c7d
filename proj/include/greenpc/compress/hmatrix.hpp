#pragma once

#include "greenpc/compress/cluster_tree.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace greenpc::compress {

enum class Pivots { nearest, random };

struct LowRank {
  Eigen::MatrixXd U;  // rows x k
  Eigen::MatrixXd V;  // cols x k, block ~ U V^T

  Index rank() const { return U.cols(); }
};

/// Cross (Nyström) approximation C W^+ R of the block on pivot rows/columns,
/// recompressed to rank <= k. Pivot count is `sample_rank`; the core
/// pseudoinverse drops singular values below 1e-10 sigma_max. Returns nothing
/// when the pivots are degenerate even after a random re-draw.
std::optional<LowRank> lowrank_block(const KernelSource& kernel, const ClusterTree& tree, int row_node, int col_node,
                                     int sample_rank, int k, Pivots pivots, std::uint64_t seed,
                                     double truncation_tol = 0.0);

struct RankRule {
  enum class Kind { fixed, log_scaled, adaptive };
  Kind kind = Kind::fixed;
  int initial_rank = 3;  // fixed: Nyström rank before truncation
  int final_rank = 1;    // fixed: rank after truncation
  int base_rank = 10;    // log_scaled
  double tau = 1e-3;     // adaptive: entrywise tolerance relative to the block maximum
  Pivots pivots = Pivots::nearest;

  static RankRule fixed(int initial, int final_rank) { return {Kind::fixed, initial, final_rank, 0, 0.0, Pivots::nearest}; }
  static RankRule log_scaled(int base) { return {Kind::log_scaled, 0, 0, base, 0.0, Pivots::random}; }
  static RankRule adaptive(double tau) { return {Kind::adaptive, 0, 0, 0, tau, Pivots::random}; }
};

/// round(base * max(1, log(n_b) / log(n_l))).
int log_scaled_rank(int base, Index n_block, Index n_leaf);

struct HOptions {
  double eta = 1.0;
  Distance distance = Distance::box;
  Index leaf_max = 32;
  RankRule rank;
  double memory_budget = INFINITY;  // bytes
  std::uint64_t seed = 0;
};

struct HBlock {
  int row_node = 0;
  int col_node = 0;
  Index row_begin = 0, row_end = 0;  // permuted ordering
  Index col_begin = 0, col_end = 0;
  bool low_rank = false;
  Eigen::MatrixXd dense;
  LowRank factors;

  Index rows() const { return row_end - row_begin; }
  Index cols() const { return col_end - col_begin; }
  std::size_t stored_scalars() const;
};

class HMatrix {
public:
  HMatrix(ClusterTree tree, HOptions options) : tree_(std::move(tree)), options_(std::move(options)) {}

  Index size() const { return tree_.size(); }
  const ClusterTree& tree() const { return tree_; }
  const HOptions& options() const { return options_; }
  const std::vector<HBlock>& blocks() const { return blocks_; }
  std::vector<HBlock>& blocks() { return blocks_; }

  std::size_t stored_scalars() const;
  double memory_bytes() const { return 8.0 * static_cast<double>(stored_scalars()); }
  double dense_bytes() const { return 8.0 * static_cast<double>(size()) * static_cast<double>(size()); }
  double compression_ratio() const { return dense_bytes() / memory_bytes(); }

  /// Entry in the original ordering, reconstructed from its block.
  double entry(Index i, Index j) const;
  Eigen::MatrixXd to_dense() const;

  nlohmann::json stats() const;

private:
  ClusterTree tree_;
  HOptions options_;
  std::vector<HBlock> blocks_;
};

/// Recursive block partition: admissible pairs become low-rank blocks,
/// inadmissible leaf pairs dense. Throws BudgetError past the memory budget.
HMatrix build_hmatrix(const KernelSource& kernel, const ClusterTree& tree, const HOptions& options);

/// y = H v in the original ordering.
Eigen::VectorXd hmatvec(const HMatrix& H, const Eigen::VectorXd& v);

struct Validation {
  double mean_relative_error = 0.0;
  bool accepted = false;
  Index samples = 0;
};

/// Mean of |H_ij - K_ij| / max(|K_ij|, 1e-12) over s uniformly drawn pairs.
Validation validate_hmatrix(const HMatrix& H, const KernelSource& kernel, Index s = 1000, double tau = 0.1,
                            std::uint64_t seed = 0);

}  // namespace greenpc::compress
