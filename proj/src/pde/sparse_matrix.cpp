#include "greenpc/pde/sparse_matrix.hpp"

#include "greenpc/error.hpp"

#include <algorithm>

namespace greenpc {

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets, bool keep_zeros) {
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    while (k < triplets.size() && triplets[k].row == r) {
      const Index c = triplets[k].col;
      if (c < 0 || c >= cols) throw SizeError("triplet column out of range");
      double v = 0.0;
      while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) v += triplets[k++].value;
      if (v != 0.0 || keep_zeros) {
        m.col_idx_.push_back(c);
        m.values_.push_back(v);
      }
    }
    m.row_ptr_[static_cast<std::size_t>(r) + 1] = static_cast<Index>(m.values_.size());
  }
  if (k != triplets.size()) throw SizeError("triplet row out of range");
  return m;
}

std::span<const SparseMatrix::Index> SparseMatrix::row_cols(Index r) const {
  const auto b = static_cast<std::size_t>(row_ptr_[r]);
  const auto e = static_cast<std::size_t>(row_ptr_[r + 1]);
  return {col_idx_.data() + b, e - b};
}

std::span<const double> SparseMatrix::row_values(Index r) const {
  const auto b = static_cast<std::size_t>(row_ptr_[r]);
  const auto e = static_cast<std::size_t>(row_ptr_[r + 1]);
  return {values_.data() + b, e - b};
}

double SparseMatrix::coeff(Index r, Index c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

void SparseMatrix::multiply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  if (x.size() != cols_) throw SizeError("sparse matvec: vector length mismatch");
  y.resize(rows_);
  for (Index r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x(col_idx_[k]);
    y(r) = s;
  }
}

Eigen::VectorXd SparseMatrix::operator*(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y;
  multiply(x, y);
  return y;
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (Index r = 0; r < rows_; ++r)
    for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_idx_[k]) = values_[k];
  return d;
}

SparseMatrix SparseMatrix::scaled(double factor) const {
  SparseMatrix m = *this;
  for (double& v : m.values_) v *= factor;
  return m;
}

std::size_t SparseMatrix::memory_bytes() const {
  return values_.size() * (sizeof(double) + sizeof(Index)) + row_ptr_.size() * sizeof(Index);
}

}  // namespace greenpc
