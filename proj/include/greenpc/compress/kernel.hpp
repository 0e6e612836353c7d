#pragma once

#include "greenpc/nn/model.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace greenpc::compress {

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Kernel matrix K(i, j) = G(x_i, x_j) over a fixed point set (dim x n).
class KernelSource {
public:
  virtual ~KernelSource() = default;

  const Eigen::MatrixXd& points() const { return points_; }
  Index size() const { return points_.cols(); }
  int dim() const { return static_cast<int>(points_.rows()); }

  double entry(Index i, Index j) const;
  virtual Eigen::MatrixXd block(const IndexList& rows, const IndexList& cols) const = 0;
  Eigen::MatrixXd dense() const;

protected:
  explicit KernelSource(Eigen::MatrixXd points) : points_(std::move(points)) {}

private:
  Eigen::MatrixXd points_;
};

class DenseKernel : public KernelSource {
public:
  DenseKernel(Eigen::MatrixXd values, Eigen::MatrixXd points);
  Eigen::MatrixXd block(const IndexList& rows, const IndexList& cols) const override;

private:
  Eigen::MatrixXd values_;
};

class FunctionKernel : public KernelSource {
public:
  using Fn = std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& y)>;
  FunctionKernel(Eigen::MatrixXd points, Fn fn);
  Eigen::MatrixXd block(const IndexList& rows, const IndexList& cols) const override;

private:
  Fn fn_;
};

/// The trained network, optionally at a frozen parameter value theta.
class NetworkKernel : public KernelSource {
public:
  NetworkKernel(const nn::MsnnModel& model, Eigen::MatrixXd points, double theta = 0.0);
  Eigen::MatrixXd block(const IndexList& rows, const IndexList& cols) const override;

private:
  const nn::MsnnModel& model_;
  double theta_;
};

IndexList iota(Index begin, Index end);

}  // namespace greenpc::compress
