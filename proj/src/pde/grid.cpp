#include "greenpc/pde/grid.hpp"

#include "greenpc/error.hpp"

#include <string>
#include <vector>

namespace greenpc::pde {

Grid::Grid(int dim, int n) : dim_(dim), n_(n) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2, got " + std::to_string(dim));
  if (n < 2) throw ConfigError("grid needs at least 2 interior points per axis, got " + std::to_string(n));
  h_ = 1.0 / (n + 1);

  if (dim == 1) {
    interior_.resize(1, n);
    for (int i = 0; i < n; ++i) interior_(0, i) = (i + 1) * h_;
    boundary_.resize(1, 2);
    boundary_ << 0.0, 1.0;
    return;
  }

  interior_.resize(2, static_cast<Eigen::Index>(n) * n);
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const Eigen::Index k = index_of({i1, i2});
      interior_(0, k) = (i1 + 1) * h_;
      interior_(1, k) = (i2 + 1) * h_;
    }

  std::vector<std::array<double, 2>> pts;
  for (int j2 = 0; j2 <= n + 1; ++j2)
    for (int j1 = 0; j1 <= n + 1; ++j1)
      if (j1 == 0 || j2 == 0 || j1 == n + 1 || j2 == n + 1)
        pts.push_back({j1 == n + 1 ? 1.0 : j1 * h_, j2 == n + 1 ? 1.0 : j2 * h_});
  boundary_.resize(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    boundary_(0, static_cast<Eigen::Index>(k)) = pts[k][0];
    boundary_(1, static_cast<Eigen::Index>(k)) = pts[k][1];
  }
}

Eigen::Index Grid::index_of(const std::array<int, 2>& a) const {
  if (dim_ == 1) return a[0];
  return a[0] + static_cast<Eigen::Index>(n_) * a[1];
}

std::array<int, 2> Grid::coords_of(Eigen::Index index) const {
  if (dim_ == 1) return {static_cast<int>(index), 0};
  return {static_cast<int>(index % n_), static_cast<int>(index / n_)};
}

Grid make_grid(int dim, int n) { return Grid(dim, n); }

}  // namespace greenpc::pde
