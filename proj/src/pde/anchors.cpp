#include "greenpc/pde/anchors.hpp"

#include "greenpc/error.hpp"
#include "greenpc/pde/dense_inverse.hpp"
#include "greenpc/pde/grid.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <algorithm>

namespace greenpc::pde {

AnchorSet generate_anchors(const CoefficientField& coeffs, int m_coarse, Scheme scheme,
                           const std::vector<double>& params) {
  const Grid grid(coeffs.dim(), m_coarse);
  const Eigen::Index n = grid.size();
  const std::vector<double> thetas = params.empty() ? std::vector<double>{0.0} : params;

  AnchorSet set;
  set.dim = coeffs.dim();
  set.m_coarse = m_coarse;
  const Eigen::Index count = n * n * static_cast<Eigen::Index>(thetas.size());
  set.x.resize(set.dim, count);
  set.y.resize(set.dim, count);
  set.g.resize(count);
  if (!params.empty()) set.theta.resize(count);

  Eigen::Index k = 0;
  for (double theta : thetas) {
    AssemblyOptions opts;
    opts.scheme = scheme;
    opts.theta = theta;
    const Eigen::MatrixXd inv = dense_inverse(assemble(grid, coeffs, opts));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i, ++k) {
        set.x.col(k) = grid.interior().col(i);
        set.y.col(k) = grid.interior().col(j);
        set.g(k) = inv(i, j);
        if (!std::isfinite(set.g(k))) throw NumericError("non-finite anchor value");
        if (!params.empty()) set.theta(k) = theta;
      }
  }
  return set;
}

void write_anchors_csv(const AnchorSet& a, std::ostream& os) {
  const char* xs[] = {"x1", "x2"};
  const char* ys[] = {"y1", "y2"};
  for (int p = 0; p < a.dim; ++p) os << xs[p] << ",";
  for (int p = 0; p < a.dim; ++p) os << ys[p] << ",";
  if (a.parametric()) os << "theta,";
  os << "g\n";
  os << std::setprecision(17);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    for (int p = 0; p < a.dim; ++p) os << a.x(p, k) << ",";
    for (int p = 0; p < a.dim; ++p) os << a.y(p, k) << ",";
    if (a.parametric()) os << a.theta(k) << ",";
    os << a.g(k) << "\n";
  }
}

AnchorSet read_anchors_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw SchemaError("anchor csv: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  AnchorSet a;
  const bool param = std::find(cols.begin(), cols.end(), "theta") != cols.end();
  a.dim = static_cast<int>((cols.size() - 1 - (param ? 1 : 0)) / 2);
  if (a.dim < 1 || a.dim > 2 || cols.back() != "g") throw SchemaError("anchor csv: unexpected header");

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != cols.size()) throw SchemaError("anchor csv: ragged row");
    rows.push_back(std::move(row));
  }
  const auto count = static_cast<Eigen::Index>(rows.size());
  a.x.resize(a.dim, count);
  a.y.resize(a.dim, count);
  a.g.resize(count);
  if (param) a.theta.resize(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    for (int p = 0; p < a.dim; ++p) {
      a.x(p, k) = r[static_cast<std::size_t>(p)];
      a.y(p, k) = r[static_cast<std::size_t>(a.dim + p)];
    }
    if (param) a.theta(k) = r[static_cast<std::size_t>(2 * a.dim)];
    a.g(k) = r.back();
  }
  return a;
}

}  // namespace greenpc::pde
