#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kleaf/errors.hpp"
#include "kleaf/sphere.hpp"

using namespace kleaf;

namespace {

SphereField random_bandlimited(const GridPtr& g, int max_degree, std::uint64_t seed, bool drop_kernel) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const HarmonicBasis& b = g->basis();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b.size(), 1);
  for (int m = 0; m < b.size(); ++m)
    if (b.degree(m) <= max_degree && !(drop_kernel && b.degree(m) == 1))
      c(m, 0) = normal(rng) / (1.0 + b.degree(m));
  return SphereField::from_coefficients(g, c);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("grid volumes and antipodal closure") {
  for (auto [n, L, vol] : {std::tuple{2, 16, 4 * M_PI}, std::tuple{3, 12, 2 * M_PI * M_PI},
                           std::tuple{2, 9, 4 * M_PI}, std::tuple{3, 9, 2 * M_PI * M_PI}}) {
    const GridPtr g = SphereGrid::build(n, L);
    CHECK(std::abs(g->weights().sum() - vol) < 1e-12 * vol);
    CHECK(g->weights().minCoeff() > 0.0);
    for (int i = 0; i < g->size(); ++i) {
      const int a = g->antipode(i);
      CHECK_MESSAGE((g->node(a) + g->node(i)).norm() < 1e-15, "node " << i);
      CHECK(g->weights()[a] == g->weights()[i]);
      CHECK(std::abs(g->node(i).norm() - 1.0) < 1e-15);
      const SMat& T = g->frame(i);
      CHECK((T.transpose() * T - SMat::Identity(n, n)).norm() < 1e-14);
      CHECK((T.transpose() * g->node(i)).norm() < 1e-14);
    }
  }
}

TEST_CASE("unsupported grids") {
  CHECK_THROWS_AS(SphereGrid::build(4, 12), CapabilityError);
  CHECK_THROWS_AS(SphereGrid::build(1, 12), CapabilityError);
  CHECK_THROWS_AS(SphereGrid::build(2, 7), ContractError);
}

TEST_CASE("quadrature moments") {
  const GridPtr g2 = SphereGrid::build(2, 16);
  auto x1sq = SphereField::from_function(g2, [](const SVec& t) { return t[1] * t[1]; });
  CHECK(quad(x1sq) == doctest::Approx(4 * M_PI / 3).epsilon(1e-13));
  auto x1q = SphereField::from_function(g2, [](const SVec& t) { return std::pow(t[1], 4); });
  CHECK(quad(x1q) == doctest::Approx(4 * M_PI / 5).epsilon(1e-13));

  for (int n : {2, 3}) {
    const GridPtr g = SphereGrid::build(n, n == 2 ? 8 : 9);
    const double i2 = quad(SphereField::from_function(g, [](const SVec& t) { return t[0] * t[0]; }));
    const double i4 = quad(SphereField::from_function(g, [](const SVec& t) { return std::pow(t[0], 4); }));
    const double i22 =
        quad(SphereField::from_function(g, [](const SVec& t) { return t[0] * t[0] * t[1] * t[1]; }));
    CHECK(i4 / i2 == doctest::Approx(3.0 / (n + 3)).epsilon(1e-12));
    CHECK(i4 == doctest::Approx(3.0 * i22).epsilon(1e-12));
    CHECK(i2 == doctest::Approx(g->volume() / (n + 1)).epsilon(1e-12));
    // an odd integrand vanishes by the antipodal symmetry
    const double odd = quad(SphereField::from_function(
        g, [](const SVec& t) { return std::pow(t[0], 3) * t[1] + 0.3 * t[1] + std::exp(t[0]) * t[2] * t[1] * t[0]; }));
    CHECK(std::abs(odd) < 1e-14);
  }
  CHECK_THROWS_AS(quad(SphereField(g2, Eigen::MatrixXd::Zero(g2->size(), 2), {2})), ContractError);
}

TEST_CASE("harmonic basis is orthonormal and counted correctly") {
  for (auto [n, L] : {std::pair{2, 16}, std::pair{3, 12}}) {
    const GridPtr g = SphereGrid::build(n, L);
    const HarmonicBasis& b = g->basis();
    const int expected = n == 2 ? (L + 1) * (L + 1) : (L + 1) * (L + 2) * (2 * L + 3) / 6;
    CHECK(b.size() == expected);
    const Eigen::MatrixXd gram = b.values().transpose() * g->weights().asDiagonal() * b.values();
    CHECK(max_abs(gram - Eigen::MatrixXd::Identity(b.size(), b.size())) < 1e-10);
    for (int m = 1; m < b.size(); ++m) CHECK(b.degree(m - 1) <= b.degree(m));
  }
}

TEST_CASE("project_kernel") {
  for (int n : {2, 3}) {
    const GridPtr g = SphereGrid::build(n, 10);
    for (int i = 0; i <= n; ++i) {
      const auto k = project_kernel(SphereField::from_function(g, [i](const SVec& t) { return t[i]; }));
      for (int j = 0; j <= n; ++j) CHECK(std::abs(k.coefficients[j] - (i == j)) < 1e-13);
      CHECK(max_abs(k.perp.values) < 1e-14);
    }
    CHECK(project_kernel(SphereField::constant(g, 2.5)).coefficients.norm() < 1e-14);

    std::mt19937 rng(9);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd ric(n + 1, n + 1);
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) ric(a, b) = normal(rng);
    ric = (ric + ric.transpose()).eval();
    const auto quadratic =
        SphereField::from_function(g, [&](const SVec& t) { return t.dot(ric * t); });
    CHECK(project_kernel(quadratic).coefficients.norm() < 1e-13);

    const SphereField f = random_bandlimited(g, 7, 3, false);
    const auto split = project_kernel(f);
    CHECK(split.coefficients.norm() > 0.1);
    CHECK(project_kernel(split.perp).coefficients.norm() < 1e-12);
  }
}

TEST_CASE("laplace_beltrami eigenvalues") {
  for (int n : {2, 3}) {
    const GridPtr g = SphereGrid::build(n, 10);
    const auto x1 = SphereField::from_function(g, [](const SVec& t) { return t[1]; });
    CHECK(max_abs(laplace_beltrami(x1).values + n * x1.values) < 1e-12);
    CHECK(max_abs(laplace_beltrami(SphereField::constant(g, 3.0)).values) < 1e-12);
    const auto y2 = SphereField::from_function(g, [](const SVec& t) { return t[0] * t[1]; });
    CHECK(max_abs(laplace_beltrami(y2).values + 2.0 * (n + 1) * y2.values) < 1e-12);
    CHECK(laplace_beltrami(y2).warnings.empty());
  }
}

TEST_CASE("solve_helmholtz") {
  const GridPtr g = SphereGrid::build(2, 12);
  const SphereField c = solve_helmholtz(SphereField::constant(g, 3.0));
  CHECK(max_abs(c.values.array() - 1.5) < 1e-13);

  const auto x0 = SphereField::from_function(g, [](const SVec& t) { return t[0]; });
  try {
    (void)solve_helmholtz(x0);
    FAIL("expected solvability error");
  } catch (const SolvabilityError& e) {
    CHECK(e.kernel_norm() == doctest::Approx(std::sqrt(4 * M_PI / 3)).epsilon(1e-10));
  }

  const auto y2 = SphereField::from_function(g, [](const SVec& t) { return t[1] * t[2]; });
  CHECK(max_abs(solve_helmholtz(y2).values + 0.25 * y2.values) < 1e-13);

  for (int n : {2, 3}) {
    const GridPtr gn = SphereGrid::build(n, 12);
    const SphereField f = random_bandlimited(gn, 9, 17 + n, true);
    const SphereField lf = laplace_beltrami(f) + double(n) * f;
    const SphereField w = solve_helmholtz(lf);
    CHECK(max_abs(w.values - f.values) < 1e-9);
    const Eigen::MatrixXd wc = analysis(w);
    for (int m = 0; m < gn->basis().size(); ++m)
      if (gn->basis().degree(m) == 1) CHECK(std::abs(wc(m, 0)) < 1e-11);
    // the solution reproduces the right-hand side
    const SphereField back = laplace_beltrami(w) + double(n) * w;
    CHECK(max_abs(back.values - lf.values) < 1e-9);
  }
}

TEST_CASE("Parseval and self-adjointness") {
  for (int n : {2, 3}) {
    const GridPtr g = SphereGrid::build(n, 12);
    const SphereField f = random_bandlimited(g, 9, 5, false);
    const SphereField h = random_bandlimited(g, 9, 6, false);
    const double energy = quad(SphereField(g, f.values.cwiseAbs2()));
    CHECK(energy == doctest::Approx(analysis(f).squaredNorm()).epsilon(1e-9));
    const double lhs = quad(SphereField(g, f.values.cwiseProduct(laplace_beltrami(h).values)));
    const double rhs = quad(SphereField(g, laplace_beltrami(f).values.cwiseProduct(h.values)));
    CHECK(std::abs(lhs - rhs) < 1e-9 * (1 + std::abs(lhs)));
    // synthesis reproduces node values
    const SphereField s = SphereField::from_coefficients(g, analysis(f));
    CHECK(max_abs(s.values - f.values) < 1e-9 * max_abs(f.values));
  }
}

TEST_CASE("tangential derivatives") {
  for (int n : {2, 3}) {
    const GridPtr g = SphereGrid::build(n, 10);
    for (int i = 0; i <= n; ++i) {
      const auto xi = SphereField::from_function(g, [i](const SVec& t) { return t[i]; });
      const auto d = tangential_derivatives(xi);
      double gerr = 0, herr = 0;
      for (int k = 0; k < g->size(); ++k) {
        const SVec expect = g->frame(k).transpose() * SVec::Unit(n + 1, i);
        for (int a = 0; a < n; ++a) gerr = std::max(gerr, std::abs(d.gradient.values(k, a) - expect[a]));
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            herr = std::max(herr, std::abs(d.hessian.values(k, a * n + b) + (a == b) * xi.values(k, 0)));
      }
      CHECK(gerr < 1e-12);
      CHECK(herr < 1e-12);
    }
    const auto dc = tangential_derivatives(SphereField::constant(g, 1.0));
    CHECK(max_abs(dc.gradient.values) < 1e-12);
    CHECK(max_abs(dc.hessian.values) < 1e-12);

    const SphereField f = random_bandlimited(g, 7, 2, false);
    const auto d = tangential_derivatives(f);
    const SphereField lap = laplace_beltrami(f);
    for (int k = 0; k < g->size(); ++k) {
      double tr = 0;
      for (int a = 0; a < n; ++a) tr += d.hessian.values(k, a * n + a);
      CHECK(std::abs(tr - lap.values(k, 0)) < 1e-8);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          CHECK(std::abs(d.hessian.values(k, a * n + b) - d.hessian.values(k, b * n + a)) < 1e-10);
    }

    // rotated frames leave contracted quantities unchanged
    const GridPtr r = g->with_rotated_frames(42);
    const SphereField fr(r, f.values);
    const auto dr = tangential_derivatives(fr);
    for (int k = 0; k < g->size(); ++k) {
      CHECK(std::abs(dr.gradient.values.row(k).norm() - d.gradient.values.row(k).norm()) < 1e-10);
      CHECK(std::abs(dr.hessian.values.row(k).norm() - d.hessian.values.row(k).norm()) < 1e-10);
    }
  }
}

TEST_CASE("aliasing warning and interpolation") {
  const GridPtr g = SphereGrid::build(2, 8);
  const auto sharp = SphereField::from_function(g, [](const SVec& t) { return std::exp(6.0 * t[0]); });
  CHECK_FALSE(laplace_beltrami(sharp).warnings.empty());
  const auto smooth = SphereField::from_function(g, [](const SVec& t) { return t[0] * t[1] * t[2]; });
  CHECK(laplace_beltrami(smooth).warnings.empty());

  std::mt19937 rng(1);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    SVec t(3);
    for (int i = 0; i < 3; ++i) t[i] = normal(rng);
    t.normalize();
    CHECK(std::abs(interpolate(smooth, t) - t[0] * t[1] * t[2]) < 1e-13);
  }
}

TEST_CASE("csv dump layout") {
  const GridPtr g = SphereGrid::build(2, 8);
  std::ostringstream os;
  write_csv(os, SphereField::constant(g, 1.0));
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "index,theta_0,theta_1,theta_2,weight,value_0");
  int lines = 0;
  for (std::string line; std::getline(is, line);) ++lines;
  CHECK(lines == g->size());
}
