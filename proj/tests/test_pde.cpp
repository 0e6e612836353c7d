#include <doctest.h>

#include "greenpc/error.hpp"
#include "greenpc/pde/anchors.hpp"
#include "greenpc/pde/assemble.hpp"
#include "greenpc/pde/dense_inverse.hpp"
#include "greenpc/pde/expression.hpp"
#include "greenpc/pde/grid.hpp"
#include "greenpc/random.hpp"

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace greenpc;
using namespace greenpc::pde;

namespace {

double poisson_green_1d(double x, double y) { return std::min(x, y) * (1.0 - std::max(x, y)); }

}  // namespace

TEST_CASE("grid construction") {
  SUBCASE("1d, n = 3") {
    const Grid g = make_grid(1, 3);
    CHECK(g.h() == doctest::Approx(0.25));
    REQUIRE(g.size() == 3);
    CHECK(g.interior()(0, 0) == doctest::Approx(0.25));
    CHECK(g.interior()(0, 1) == doctest::Approx(0.5));
    CHECK(g.interior()(0, 2) == doctest::Approx(0.75));
    CHECK(g.boundary().cols() == 2);
  }
  SUBCASE("2d, n = 2 uses first-coordinate-fastest ordering") {
    const Grid g = make_grid(2, 2);
    REQUIRE(g.size() == 4);
    const double t = 1.0 / 3.0;
    const double expected[4][2] = {{t, t}, {2 * t, t}, {t, 2 * t}, {2 * t, 2 * t}};
    for (int k = 0; k < 4; ++k) {
      CHECK(g.interior()(0, k) == doctest::Approx(expected[k][0]));
      CHECK(g.interior()(1, k) == doctest::Approx(expected[k][1]));
    }
    CHECK(g.boundary().cols() == 12);
  }
  SUBCASE("1d, n = 256") {
    const Grid g = make_grid(1, 256);
    CHECK(g.size() == 256);
    CHECK(g.boundary().cols() == 2);
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(make_grid(3, 4), ConfigError);
    CHECK_THROWS_AS(make_grid(1, 1), ConfigError);
  }
  SUBCASE("index_of and coords_of are inverse") {
    const Grid g = make_grid(2, 7);
    for (Eigen::Index k = 0; k < g.size(); ++k) CHECK(g.index_of(g.coords_of(k)) == k);
    for (int k = 0; k < g.size(); ++k) {
      const auto c = g.coords_of(k);
      CHECK(g.interior()(0, k) == doctest::Approx((c[0] + 1) * g.h()));
      CHECK(g.interior()(1, k) == doctest::Approx((c[1] + 1) * g.h()));
    }
  }
}

TEST_CASE("expression parsing, evaluation and symbolic derivatives") {
  const auto e = Expression::parse("0.01*(1 + x1^2 + x2^2) - 3*sin(theta)/2 + exp(-x)");
  CHECK(e.eval(0.3, 0.4, 0.5) ==
        doctest::Approx(0.01 * (1 + 0.09 + 0.16) - 1.5 * std::sin(0.5) + std::exp(-0.3)));
  CHECK(Expression::parse("2^3^2").eval(0) == doctest::Approx(512.0));
  CHECK(Expression::parse("-2^2").eval(0) == doctest::Approx(-4.0));
  CHECK(Expression::parse("eps^((2*x - 1)*(2*lambda - 1))", {{"eps", 0.05}, {"lambda", 0.8}}).eval(0.7) ==
        doctest::Approx(std::pow(0.05, 0.4 * 0.6)));
  CHECK_THROWS_AS(Expression::parse("1 + foo"), ConfigError);
  CHECK_THROWS_AS(Expression::parse("(1 + x"), ConfigError);

  // Derivatives against central differences.
  const char* cases[] = {"x^2*cos(x2) + tanh(x*x2)", "sqrt(1 + x^2)/(2 + x2)", "log(2 + x)*exp(x2)",
                         "0.05^((2*x - 1)*0.6)", "abs(x - 2)*x2^3"};
  for (const char* text : cases) {
    const auto f = Expression::parse(text);
    const double h = 1e-6;
    for (Variable v : {Variable::x1, Variable::x2}) {
      const auto df = f.derivative(v);
      for (double x : {0.1, 0.45, 0.9})
        for (double y : {0.2, 0.7}) {
          const double fd = v == Variable::x1 ? (f.eval(x + h, y) - f.eval(x - h, y)) / (2 * h)
                                              : (f.eval(x, y + h) - f.eval(x, y - h)) / (2 * h);
          CHECK(df.eval(x, y) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
  }
  CHECK(Expression::parse("3*x2 + 1").derivative(Variable::x1).is_zero());
  CHECK(Expression::parse("cos(theta)*sin(theta)*(1 - xi)", {{"xi", 1.0}}).is_zero());

  Eigen::ArrayXd x1(3), x2(3), th(3);
  x1 << 0.1, 0.2, 0.3;
  x2 << 0.5, 0.6, 0.7;
  th << 0.0, 1.0, 2.0;
  const auto g = Expression::parse("x1*x2 + cos(theta)");
  const Eigen::ArrayXd v = g.eval(x1, x2, th);
  for (int k = 0; k < 3; ++k) CHECK(v(k) == doctest::Approx(g.eval(x1(k), x2(k), th(k))));
}

TEST_CASE("assembly stencils") {
  SUBCASE("1d Poisson is (1/h) tridiag(-1, 2, -1)") {
    const Grid g = make_grid(1, 3);
    const Eigen::MatrixXd A = assemble(g, problems::poisson(1)).to_dense();
    Eigen::MatrixXd expected(3, 3);
    expected << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    expected /= g.h();
    CHECK((A - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("1d reaction diagonal is 2/h + h c(x_i)") {
    const Grid g = make_grid(1, 40);
    const SparseMatrix A = assemble(g, problems::reaction_1d());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double x = g.interior()(0, i);
      CHECK(A.coeff(i, i) == doctest::Approx(2.0 / g.h() - g.h() * 50.0 * (1 + x * x)));
    }
  }
  SUBCASE("volume scaling contract: A = h^d A0") {
    for (int d : {1, 2}) {
      const Grid g = make_grid(d, 9);
      const auto coeffs = d == 1 ? problems::convection_1d() : problems::convection_2d();
      AssemblyOptions scaled, raw;
      scaled.scheme = raw.scheme = Scheme::upwind_convection;
      raw.volume_scaling = false;
      const Eigen::MatrixXd As = assemble(g, coeffs, scaled).to_dense();
      const Eigen::MatrixXd A0 = assemble(g, coeffs, raw).to_dense();
      CHECK((As - std::pow(g.h(), d) * A0).cwiseAbs().maxCoeff() < 1e-12 * A0.cwiseAbs().maxCoeff());
    }
  }
  SUBCASE("rotated Laplacian with xi = 1 reduces to the 5-point Laplacian") {
    const Grid g = make_grid(2, 6);
    AssemblyOptions o;
    o.theta = 0.7;
    const Eigen::MatrixXd R = assemble(g, problems::rotated_laplacian(1.0), o).to_dense();
    const Eigen::MatrixXd P = assemble(g, problems::poisson(2)).to_dense();
    CHECK((R - P).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("9-point stencil is exact on quadratics away from the boundary") {
    const Grid g = make_grid(2, 8);
    const double theta = 0.6, xi = 0.1;
    AssemblyOptions o;
    o.theta = theta;
    o.volume_scaling = false;
    const Eigen::MatrixXd A = assemble(g, problems::rotated_laplacian(xi), o).to_dense();
    const double c = std::cos(theta), s = std::sin(theta);
    const double a11 = c * c + xi * s * s, a12 = c * s * (1 - xi), a22 = s * s + xi * c * c;
    // u = x1^2 + 3 x1 x2 - x2^2: L u = -(2 a11 + 6 a12 - 2 a22).
    Eigen::VectorXd u(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const double x = g.interior()(0, k), y = g.interior()(1, k);
      u(k) = x * x + 3 * x * y - y * y;
    }
    const Eigen::VectorXd Au = A * u;
    const double Lu = -(2 * a11 + 6 * a12 - 2 * a22);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const auto ij = g.coords_of(k);
      if (ij[0] == 0 || ij[1] == 0 || ij[0] == g.n() - 1 || ij[1] == g.n() - 1) continue;
      CHECK(Au(k) == doctest::Approx(Lu).epsilon(1e-9));
    }
  }
  SUBCASE("full tensor with upwind scheme is rejected") {
    const Grid g = make_grid(2, 4);
    CHECK_THROWS_AS(assemble(g, problems::rotated_laplacian(0.1), Scheme::upwind_convection),
                    UnsupportedStencilError);
  }
  SUBCASE("upwind convection matrix is an M-matrix") {
    for (int n : {8, 31, 64, 255, 1024}) {
      const Grid g = make_grid(1, n);
      const SparseMatrix A = assemble(g, problems::convection_1d(), Scheme::upwind_convection);
      for (SparseMatrix::Index r = 0; r < A.rows(); ++r) {
        double row_sum = 0.0;
        const auto cols = A.row_cols(r);
        const auto vals = A.row_values(r);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          row_sum += vals[k];
          if (cols[k] != r) CHECK(vals[k] <= 0.0);
        }
        CHECK(row_sum >= -1e-12);
      }
    }
  }
}

TEST_CASE("second-order convergence on a manufactured solution") {
  // u = sin(pi x) exp(x), a = 1 + x^2, b = 1, c = 1 + x.
  const auto coeffs = CoefficientField::from_expressions(1, {{Expression::parse("1 + x^2")}},
                                                         {Expression::parse("1")}, Expression::parse("1 + x"));
  auto u = [](double x) { return std::sin(std::numbers::pi * x) * std::exp(x); };
  auto f = [](double x) {
    const double pi = std::numbers::pi;
    const double s = std::sin(pi * x), c = std::cos(pi * x), e = std::exp(x);
    const double du = e * (s + pi * c);
    const double d2u = e * (2 * pi * c + (1 - pi * pi) * s);
    const double a = 1 + x * x, da = 2 * x;
    return -(a * d2u + da * du) + du + (1 + x) * s * e;
  };
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> logh, logerr;
  for (int n : {16, 32, 64, 128}) {
    const Grid g = make_grid(1, n);
    const Eigen::MatrixXd A = assemble(g, coeffs).to_dense();
    Eigen::VectorXd rhs(n), exact(n);
    for (int i = 0; i < n; ++i) {
      const double x = g.interior()(0, i);
      rhs(i) = g.h() * f(x);
      exact(i) = u(x);
    }
    const Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
    logh.push_back(std::log(g.h()));
    logerr.push_back(std::log((sol - exact).cwiseAbs().maxCoeff()));
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < logh.size(); ++i) mx += logh[i], my += logerr[i];
  mx /= logh.size(), my /= logh.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < logh.size(); ++i)
    sxy += (logh[i] - mx) * (logerr[i] - my), sxx += (logh[i] - mx) * (logh[i] - mx);
  const double slope = sxy / sxx;
  MESSAGE("manufactured-solution slope " << slope);
  CHECK(slope >= 1.8);
  CHECK(slope <= 2.2);
  CHECK(elapsed < 1.0);
}

TEST_CASE("dense inverse") {
  SUBCASE("identity") {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    CHECK((dense_inverse(I) - I).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("1d Poisson inverse equals the analytic Green's function at the nodes") {
    const Grid g = make_grid(1, 34);
    const Eigen::MatrixXd inv = dense_inverse(assemble(g, problems::poisson(1)));
    double err = 0.0;
    for (Eigen::Index i = 0; i < 34; ++i)
      for (Eigen::Index j = 0; j < 34; ++j)
        err = std::max(err, std::abs(inv(i, j) - poisson_green_1d(g.interior()(0, i), g.interior()(0, j))));
    CHECK(err < 1e-13);
  }
  SUBCASE("random diagonally dominant matrix") {
    Rng rng(7);
    Eigen::MatrixXd A(10, 10);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) A(i, j) = rng.uniform(-1, 1);
    for (int i = 0; i < 10; ++i) A(i, i) += 12.0;
    const Eigen::MatrixXd inv = dense_inverse(A);
    CHECK((A * inv - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("singular and oversized inputs") {
    Eigen::MatrixXd S = Eigen::MatrixXd::Ones(4, 4);
    CHECK_THROWS_AS(dense_inverse(S), FactorizationError);
    CHECK_THROWS_AS(dense_inverse(Eigen::MatrixXd::Identity(6, 6), 5), SizeError);
  }
}

TEST_CASE("anchor generation") {
  SUBCASE("1d Poisson anchors reproduce the analytic Green's function") {
    const AnchorSet a = generate_anchors(problems::poisson(1), 34, Scheme::central);
    CHECK(a.size() == 34 * 34);
    double err = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k)
      err = std::max(err, std::abs(a.g(k) - poisson_green_1d(a.x(0, k), a.y(0, k))));
    CHECK(err < 1e-13);
  }
  SUBCASE("2d anchors cover the 34 x 34 grid pairs") {
    const AnchorSet a = generate_anchors(problems::poisson(2), 34, Scheme::central);
    CHECK(a.size() == 1156 * 1156);
    CHECK(a.x.rows() == 2);
  }
  SUBCASE("parametric anchors carry one block per angle") {
    const std::vector<double> thetas = {0, std::numbers::pi / 4, std::numbers::pi / 2, 3 * std::numbers::pi / 4};
    const AnchorSet a = generate_anchors(problems::rotated_laplacian(0.1), 6, Scheme::central, thetas);
    CHECK(a.size() == 4 * 36 * 36);
    CHECK(a.theta(0) == 0.0);
    CHECK(a.theta(a.size() - 1) == doctest::Approx(3 * std::numbers::pi / 4));
  }
  SUBCASE("csv round trip") {
    const AnchorSet a = generate_anchors(problems::reaction_1d(), 5, Scheme::central);
    std::stringstream ss;
    write_anchors_csv(a, ss);
    const AnchorSet b = read_anchors_csv(ss);
    REQUIRE(b.size() == a.size());
    CHECK((a.g - b.g).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  }
}
