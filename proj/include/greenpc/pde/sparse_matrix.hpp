#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace greenpc {

/// Compressed-row matrix with sorted, unique column indices per row.
class SparseMatrix {
public:
  using Index = std::int64_t;

  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

  /// Duplicates are summed; exact zeros are kept only if `keep_zeros`.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets,
                                    bool keep_zeros = false);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nonzeros() const { return static_cast<Index>(values_.size()); }

  std::span<const Index> row_cols(Index r) const;
  std::span<const double> row_values(Index r) const;

  double coeff(Index r, Index c) const;

  void multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd to_dense() const;
  SparseMatrix scaled(double factor) const;

  std::size_t memory_bytes() const;

private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> col_idx_;
  std::vector<double> values_;
};

}  // namespace greenpc
