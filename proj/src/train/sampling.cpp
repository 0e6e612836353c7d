#include "greenpc/train/sampling.hpp"

#include "greenpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace greenpc::train {

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index k, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  k = std::min(k, n);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

TrainingData make_training_data(const pde::AnchorSet& anchors, int pool_size, bool parametric, Rng& rng) {
  if (anchors.size() == 0) throw ConfigError("empty anchor set");
  if (parametric && !anchors.parametric()) throw ConfigError("parametric training needs anchors with theta");
  const auto pick = sample_without_replacement(anchors.size(), pool_size, rng);
  TrainingData data;
  data.dim = anchors.dim;
  data.parametric = parametric;
  pde::AnchorSet& p = data.pool;
  p.dim = anchors.dim;
  p.m_coarse = anchors.m_coarse;
  const auto k = static_cast<Eigen::Index>(pick.size());
  p.x.resize(anchors.dim, k);
  p.y.resize(anchors.dim, k);
  p.g.resize(k);
  if (anchors.parametric()) p.theta.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index s = pick[static_cast<std::size_t>(i)];
    p.x.col(i) = anchors.x.col(s);
    p.y.col(i) = anchors.y.col(s);
    p.g(i) = anchors.g(s);
    if (anchors.parametric()) p.theta(i) = anchors.theta(s);
  }
  return data;
}

namespace {

Eigen::MatrixXd uniform_points(int dim, Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd p(dim, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (int i = 0; i < dim; ++i) p(i, k) = rng.uniform();
  return p;
}

Eigen::MatrixXd boundary_points(int dim, Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd p(dim, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (dim == 1) {
      p(0, k) = static_cast<double>(rng.index(2));
    } else {
      const auto side = rng.index(4);
      const double s = rng.uniform();
      const int axis = static_cast<int>(side / 2);
      p(axis, k) = static_cast<double>(side % 2);
      p(1 - axis, k) = s;
    }
  }
  return p;
}

// Uniform draw from the ball of radius `radius`.
Eigen::VectorXd ball(int dim, double radius, Rng& rng) {
  Eigen::VectorXd u(dim);
  do {
    for (int i = 0; i < dim; ++i) u(i) = rng.uniform(-radius, radius);
  } while (u.norm() > radius);
  return u;
}

Eigen::RowVectorXd thetas(const TrainConfig& c, Eigen::Index n, Rng& rng) {
  Eigen::RowVectorXd t(n);
  for (Eigen::Index k = 0; k < n; ++k) t(k) = rng.uniform(c.theta_min, c.theta_max);
  return t;
}

}  // namespace

Batch sample_batch(const TrainConfig& config, const TrainingData& data, double eps, Rng& rng) {
  if (data.pool.size() == 0) throw ConfigError("empty anchor set");
  const BatchComposition bc = data.parametric ? config.batch.scaled(2) : config.batch;
  const int d = data.dim;
  Batch b;

  b.boundary.x = boundary_points(d, bc.boundary, rng);
  b.boundary.y = uniform_points(d, bc.boundary, rng);
  if (data.parametric) b.boundary.theta = thetas(config, bc.boundary, rng);

  const auto pick = sample_without_replacement(data.pool.size(), bc.anchors, rng);
  const auto na = static_cast<Eigen::Index>(pick.size());
  b.anchors.x.resize(d, na);
  b.anchors.y.resize(d, na);
  b.anchor_values.resize(na);
  if (data.parametric) b.anchors.theta.resize(na);
  for (Eigen::Index i = 0; i < na; ++i) {
    const Eigen::Index s = pick[static_cast<std::size_t>(i)];
    b.anchors.x.col(i) = data.pool.x.col(s);
    b.anchors.y.col(i) = data.pool.y.col(s);
    b.anchor_values(i) = data.pool.g(s);
    if (data.parametric) b.anchors.theta(i) = data.pool.theta(s);
  }

  const Eigen::Index nu = bc.uniform, nn = bc.near_diagonal;
  b.uniform_count = nu;
  b.residual.x.resize(d, nu + nn);
  b.residual.y.resize(d, nu + nn);
  b.residual.x.leftCols(nu) = uniform_points(d, nu, rng);
  b.residual.y.leftCols(nu) = uniform_points(d, nu, rng);
  for (Eigen::Index k = 0; k < nn; ++k) {
    const Eigen::VectorXd y = uniform_points(d, 1, rng).col(0);
    const Eigen::VectorXd x = (y + eps * ball(d, config.near_radius, rng)).cwiseMax(0.0).cwiseMin(1.0);
    b.residual.x.col(nu + k) = x;
    b.residual.y.col(nu + k) = y;
  }
  if (data.parametric) b.residual.theta = thetas(config, nu + nn, rng);
  return b;
}

}  // namespace greenpc::train
