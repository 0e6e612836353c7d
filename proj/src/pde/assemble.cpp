#include "greenpc/pde/assemble.hpp"

#include "greenpc/error.hpp"

#include <cmath>

namespace greenpc::pde {

namespace {

Eigen::MatrixXd shifted(const Eigen::MatrixXd& pts, int axis, double delta) {
  Eigen::MatrixXd out = pts;
  out.row(axis).array() += delta;
  return out;
}

}  // namespace

SparseMatrix assemble(const Grid& grid, const CoefficientField& coeffs, const AssemblyOptions& options) {
  const int d = grid.dim();
  if (coeffs.dim() != d) throw ConfigError("coefficient dimension does not match grid dimension");
  if (!coeffs.diagonal_diffusion() && options.scheme != Scheme::central)
    throw UnsupportedStencilError("full diffusion tensor requires the central 9-point stencil");

  const int n = grid.n();
  const double h = grid.h();
  const double h2 = h * h;
  const Eigen::Index N = grid.size();
  const Eigen::MatrixXd& X = grid.interior();

  const CoefficientSample at_nodes = coeffs.sample(X, {}, options.theta);

  // a_pp at the half points x +- h/2 e_p.
  std::vector<CoefficientSample> half_plus, half_minus;
  for (int p = 0; p < d; ++p) {
    half_plus.push_back(coeffs.sample(shifted(X, p, 0.5 * h), {}, options.theta));
    half_minus.push_back(coeffs.sample(shifted(X, p, -0.5 * h), {}, options.theta));
  }
  // a_pq at x +- h e_p for the cross terms.
  std::vector<CoefficientSample> full_plus, full_minus;
  if (!coeffs.diagonal_diffusion()) {
    for (int p = 0; p < d; ++p) {
      full_plus.push_back(coeffs.sample(shifted(X, p, h), {}, options.theta));
      full_minus.push_back(coeffs.sample(shifted(X, p, -h), {}, options.theta));
    }
  }

  std::vector<SparseMatrix::Triplet> trip;
  trip.reserve(static_cast<std::size_t>(N) * (coeffs.diagonal_diffusion() ? 2 * d + 1 : 9));

  auto neighbor = [&](Eigen::Index k, std::array<int, 2> offset) -> Eigen::Index {
    auto c = grid.coords_of(k);
    for (int p = 0; p < d; ++p) {
      c[p] += offset[p];
      if (c[p] < 0 || c[p] >= n) return -1;
    }
    return grid.index_of(c);
  };
  auto add = [&](Eigen::Index row, Eigen::Index col, double v) {
    if (col >= 0 && v != 0.0) trip.push_back({row, col, v});
  };

  for (Eigen::Index k = 0; k < N; ++k) {
    double diag = at_nodes.c(0, k);
    for (int p = 0; p < d; ++p) {
      std::array<int, 2> e{0, 0};
      e[p] = 1;
      std::array<int, 2> me{-e[0], -e[1]};
      const double ap = half_plus[p].a_at(p, p, k);
      const double am = half_minus[p].a_at(p, p, k);
      diag += (ap + am) / h2;
      add(k, neighbor(k, e), -ap / h2);
      add(k, neighbor(k, me), -am / h2);

      const double b = at_nodes.b(p, k);
      if (options.scheme == Scheme::central) {
        add(k, neighbor(k, e), b / (2.0 * h));
        add(k, neighbor(k, me), -b / (2.0 * h));
      } else if (b >= 0.0) {
        diag += b / h;
        add(k, neighbor(k, me), -b / h);
      } else {
        diag -= b / h;
        add(k, neighbor(k, e), b / h);
      }
    }
    if (!coeffs.diagonal_diffusion()) {
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
          if (p == q) continue;
          const double ap = full_plus[p].a_at(p, q, k);
          const double am = full_minus[p].a_at(p, q, k);
          std::array<int, 2> pp{0, 0}, pm{0, 0}, mp{0, 0}, mm{0, 0};
          pp[p] = 1, pp[q] = 1;
          pm[p] = 1, pm[q] = -1;
          mp[p] = -1, mp[q] = 1;
          mm[p] = -1, mm[q] = -1;
          add(k, neighbor(k, pp), -ap / (4.0 * h2));
          add(k, neighbor(k, pm), ap / (4.0 * h2));
          add(k, neighbor(k, mp), am / (4.0 * h2));
          add(k, neighbor(k, mm), -am / (4.0 * h2));
        }
    }
    trip.push_back({k, k, diag});
  }

  const double scale = options.volume_scaling ? std::pow(h, d) : 1.0;
  for (auto& t : trip) t.value *= scale;
  return SparseMatrix::from_triplets(N, N, std::move(trip));
}

}  // namespace greenpc::pde
