#include "greenpc/compress/kernel.hpp"

#include <numeric>
#include <stdexcept>

namespace greenpc::compress {

IndexList iota(Index begin, Index end) {
  IndexList v(static_cast<std::size_t>(end - begin));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

double KernelSource::entry(Index i, Index j) const { return block({i}, {j})(0, 0); }

Eigen::MatrixXd KernelSource::dense() const {
  const IndexList all = iota(0, size());
  return block(all, all);
}

DenseKernel::DenseKernel(Eigen::MatrixXd values, Eigen::MatrixXd points)
    : KernelSource(std::move(points)), values_(std::move(values)) {
  if (values_.rows() != size() || values_.cols() != size()) throw std::invalid_argument("dense kernel shape mismatch");
}

Eigen::MatrixXd DenseKernel::block(const IndexList& rows, const IndexList& cols) const {
  Eigen::MatrixXd b(rows.size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows.size(); ++r) b(r, c) = values_(rows[r], cols[c]);
  return b;
}

FunctionKernel::FunctionKernel(Eigen::MatrixXd points, Fn fn) : KernelSource(std::move(points)), fn_(std::move(fn)) {}

Eigen::MatrixXd FunctionKernel::block(const IndexList& rows, const IndexList& cols) const {
  Eigen::MatrixXd b(rows.size(), cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Eigen::VectorXd y = points().col(cols[c]);
    for (std::size_t r = 0; r < rows.size(); ++r) b(r, c) = fn_(points().col(rows[r]), y);
  }
  return b;
}

NetworkKernel::NetworkKernel(const nn::MsnnModel& model, Eigen::MatrixXd points, double theta)
    : KernelSource(std::move(points)), model_(model), theta_(theta) {
  if (dim() != model.arch().dim) throw std::invalid_argument("network kernel dimension mismatch");
}

Eigen::MatrixXd NetworkKernel::block(const IndexList& rows, const IndexList& cols) const {
  const auto nr = static_cast<Index>(rows.size()), nc = static_cast<Index>(cols.size());
  nn::Points pts{Eigen::MatrixXd(dim(), nr * nc), Eigen::MatrixXd(dim(), nr * nc), {}};
  for (Index c = 0; c < nc; ++c)
    for (Index r = 0; r < nr; ++r) {
      pts.x.col(c * nr + r) = points().col(rows[static_cast<std::size_t>(r)]);
      pts.y.col(c * nr + r) = points().col(cols[static_cast<std::size_t>(c)]);
    }
  if (model_.arch().parametric) pts.theta = Eigen::RowVectorXd::Constant(nr * nc, theta_);
  const Eigen::RowVectorXd v = nn::evaluate(model_, pts);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), nr, nc);
}

}  // namespace greenpc::compress
