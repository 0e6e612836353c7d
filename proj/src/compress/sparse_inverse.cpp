#include "greenpc/compress/sparse_inverse.hpp"

#include "greenpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace greenpc::compress {

Eigen::VectorXd decay_ratio(const KernelSource& kernel, double r) {
  if (!(r > 0.0)) throw ConfigError("decay radius must be positive");
  const Index n = kernel.size();
  const IndexList all = iota(0, n);
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  const Index chunk = std::max<Index>(1, 65536 / std::max<Index>(n, 1));
  for (Index start = 0; start < n; start += chunk) {
    const Index count = std::min(chunk, n - start);
    const Eigen::MatrixXd rows = kernel.block(iota(start, start + count), all);
    for (Index k = 0; k < count; ++k) {
      const Index i = start + k;
      const Eigen::VectorXd xi = kernel.points().col(i);
      for (Index j = 0; j < n; ++j)
        if ((kernel.points().col(j) - xi).norm() > r) rho(i) = std::max(rho(i), std::abs(rows(k, j)));
    }
  }
  return rho;
}

std::string to_string(Format f) { return f == Format::sparse ? "sparse" : "hmatrix"; }

FormatDecision choose_format(const Eigen::VectorXd& rho, double tau, double sparse_bytes, double hmatrix_bytes,
                             double budget) {
  FormatDecision d;
  d.local = rho.size() == 0 || rho.maxCoeff() < tau;
  const Format preferred = d.local ? Format::sparse : Format::hmatrix;
  const double pref_bytes = d.local ? sparse_bytes : hmatrix_bytes;
  const double other_bytes = d.local ? hmatrix_bytes : sparse_bytes;
  if (pref_bytes <= budget) {
    d.format = preferred;
  } else if (other_bytes <= budget) {
    d.format = d.local ? Format::hmatrix : Format::sparse;
    d.fallback = true;
  } else {
    std::ostringstream os;
    os << "both formats exceed the memory budget (" << budget << " bytes): sparse " << sparse_bytes << ", hmatrix "
       << hmatrix_bytes;
    throw BudgetError(os.str());
  }
  return d;
}

double locality_threshold(const KernelSource& kernel, double tau_rel) {
  double diag = 0.0;
  for (Index i = 0; i < kernel.size(); ++i) diag = std::max(diag, std::abs(kernel.entry(i, i)));
  return tau_rel * diag;
}

SparseMatrix build_sparse(const KernelSource& kernel, double r, int p) {
  if (p < 1) throw ConfigError("sparse pattern size p must be positive");
  const Index n = kernel.size();
  const auto& pts = kernel.points();
  std::vector<SparseMatrix::Triplet> trips;
  for (Index i = 0; i < n; ++i) {
    IndexList cand;
    for (Index j = 0; j < n; ++j)
      if ((pts.col(j) - pts.col(i)).norm() <= r) cand.push_back(j);
    const Eigen::MatrixXd vals = kernel.block({i}, cand);
    std::vector<std::size_t> order(cand.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(vals(0, a)) > std::abs(vals(0, b)); });
    const std::size_t keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(p));
    for (std::size_t k = 0; k < keep; ++k) trips.push_back({i, cand[order[k]], vals(0, order[k])});
  }
  return SparseMatrix::from_triplets(n, n, std::move(trips));
}

}  // namespace greenpc::compress
