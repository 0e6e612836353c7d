#pragma once

#include <Eigen/Core>

#include <array>

namespace greenpc::pde {

/// Uniform tensor grid on [0,1]^dim with n interior nodes per axis.
///
/// Interior nodes are ordered lexicographically with the first coordinate
/// running fastest: index = i1 + n * i2 (0-based per-axis indices).
class Grid {
public:
  Grid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double h() const { return h_; }
  Eigen::Index size() const { return interior_.cols(); }

  /// dim x size() interior coordinates.
  const Eigen::MatrixXd& interior() const { return interior_; }
  /// dim x (#boundary) boundary coordinates, lexicographic over the full grid.
  const Eigen::MatrixXd& boundary() const { return boundary_; }

  Eigen::Index index_of(const std::array<int, 2>& axis_index) const;
  std::array<int, 2> coords_of(Eigen::Index index) const;
  Eigen::VectorXd point(Eigen::Index index) const { return interior_.col(index); }

private:
  int dim_;
  int n_;
  double h_;
  Eigen::MatrixXd interior_;
  Eigen::MatrixXd boundary_;
};

Grid make_grid(int dim, int n);

}  // namespace greenpc::pde
