#pragma once

#include "greenpc/compress/kernel.hpp"

#include <vector>

namespace greenpc::compress {

struct ClusterNode {
  Index begin = 0;  // range in the permuted ordering
  Index end = 0;
  Eigen::VectorXd lo, hi;  // bounding box of the node's points
  std::vector<int> children;
  int level = 0;

  Index size() const { return end - begin; }
  bool leaf() const { return children.empty(); }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  double diameter() const { return (hi - lo).norm(); }
};

/// Geometric 2^d bisection of a point set down to leaves of at most leaf_max points.
class ClusterTree {
public:
  ClusterTree(const Eigen::MatrixXd& points, Index leaf_max);

  const ClusterNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int root() const { return 0; }
  std::size_t node_count() const { return nodes_.size(); }
  int depth() const;
  Index leaf_max() const { return leaf_max_; }
  Index size() const { return static_cast<Index>(perm_.size()); }

  /// perm()[k] = original index of the k-th point in tree order.
  const IndexList& perm() const { return perm_; }
  const IndexList& inverse_perm() const { return iperm_; }
  IndexList original_indices(int id) const;

private:
  int split(const Eigen::MatrixXd& points, Index begin, Index end, int level);

  std::vector<ClusterNode> nodes_;
  IndexList perm_, iperm_;
  Index leaf_max_;
};

enum class Distance { box, center };

/// Euclidean gap between two axis-aligned boxes.
double box_distance(const ClusterNode& a, const ClusterNode& b);
double cluster_distance(const ClusterNode& a, const ClusterNode& b, Distance metric);

/// max(diam a, diam b) <= eta * dist(a, b), with dist > 0.
bool admissible(const ClusterNode& a, const ClusterNode& b, double eta, Distance metric = Distance::box);

/// min(floor(sqrt(N)), 128) for 1D runs; 64 for N <= 64 and 128 above in 2D.
Index default_leaf_size(int dim, Index n_per_axis, Index n_total);

}  // namespace greenpc::compress
