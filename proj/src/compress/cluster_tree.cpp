#include "greenpc/compress/cluster_tree.hpp"

#include "greenpc/error.hpp"

#include <algorithm>
#include <cmath>

namespace greenpc::compress {

ClusterTree::ClusterTree(const Eigen::MatrixXd& points, Index leaf_max) : leaf_max_(leaf_max) {
  if (points.cols() == 0) throw ConfigError("cluster tree needs points");
  if (leaf_max < 1) throw ConfigError("leaf size must be positive");
  perm_ = iota(0, points.cols());
  split(points, 0, points.cols(), 0);
  iperm_.resize(perm_.size());
  for (std::size_t k = 0; k < perm_.size(); ++k) iperm_[static_cast<std::size_t>(perm_[k])] = static_cast<Index>(k);
}

int ClusterTree::split(const Eigen::MatrixXd& points, Index begin, Index end, int level) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  const int d = static_cast<int>(points.rows());
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, INFINITY), hi = Eigen::VectorXd::Constant(d, -INFINITY);
  for (Index k = begin; k < end; ++k) {
    lo = lo.cwiseMin(points.col(perm_[static_cast<std::size_t>(k)]));
    hi = hi.cwiseMax(points.col(perm_[static_cast<std::size_t>(k)]));
  }
  {
    ClusterNode& n = nodes_[static_cast<std::size_t>(id)];
    n.begin = begin;
    n.end = end;
    n.lo = lo;
    n.hi = hi;
    n.level = level;
  }
  if (end - begin <= leaf_max_ || (hi - lo).maxCoeff() == 0.0) return id;

  // Child index from the bisection of every axis; stable within each child.
  const Eigen::VectorXd mid = 0.5 * (lo + hi);
  const int nchild = 1 << d;
  std::vector<IndexList> bins(static_cast<std::size_t>(nchild));
  for (Index k = begin; k < end; ++k) {
    const Index p = perm_[static_cast<std::size_t>(k)];
    int c = 0;
    for (int a = 0; a < d; ++a)
      if (points(a, p) > mid(a)) c |= 1 << a;
    bins[static_cast<std::size_t>(c)].push_back(p);
  }
  Index pos = begin;
  std::vector<std::pair<Index, Index>> ranges;
  for (const auto& bin : bins) {
    if (bin.empty()) continue;
    std::copy(bin.begin(), bin.end(), perm_.begin() + pos);
    ranges.emplace_back(pos, pos + static_cast<Index>(bin.size()));
    pos += static_cast<Index>(bin.size());
  }
  for (const auto& [b, e] : ranges) {
    const int child = split(points, b, e, level + 1);
    nodes_[static_cast<std::size_t>(id)].children.push_back(child);
  }
  return id;
}

int ClusterTree::depth() const {
  int d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.level + 1);
  return d;
}

IndexList ClusterTree::original_indices(int id) const {
  const ClusterNode& n = node(id);
  return IndexList(perm_.begin() + n.begin, perm_.begin() + n.end);
}

double box_distance(const ClusterNode& a, const ClusterNode& b) {
  double s = 0.0;
  for (Index i = 0; i < a.lo.size(); ++i) {
    const double gap = std::max({0.0, a.lo(i) - b.hi(i), b.lo(i) - a.hi(i)});
    s += gap * gap;
  }
  return std::sqrt(s);
}

double cluster_distance(const ClusterNode& a, const ClusterNode& b, Distance metric) {
  return metric == Distance::box ? box_distance(a, b) : (a.center() - b.center()).norm();
}

bool admissible(const ClusterNode& a, const ClusterNode& b, double eta, Distance metric) {
  const double dist = cluster_distance(a, b, metric);
  if (!(dist > 0.0)) return false;
  // Overlapping index ranges can never form a low-rank block.
  if (a.begin < b.end && b.begin < a.end) return false;
  return std::max(a.diameter(), b.diameter()) <= eta * dist;
}

Index default_leaf_size(int dim, Index n_per_axis, Index n_total) {
  if (dim == 1) return std::min<Index>(static_cast<Index>(std::floor(std::sqrt(static_cast<double>(n_total)))), 128);
  return n_per_axis <= 64 ? 64 : 128;
}

}  // namespace greenpc::compress
