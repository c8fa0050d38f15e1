#include <cmath>
#include <random>

#include "doctest.h"
#include "kleaf/errors.hpp"
#include "kleaf/manifold.hpp"
#include "test_support.hpp"

using namespace kleaf;

namespace {

// Christoffel symbols from 4th-order central differences of g, computed
// independently of the jet machinery.
Christoffel fd_christoffels(const MetricModel& m, const SVec& x, double h = 1e-3) {
  const int n = m.dim();
  std::vector<SMat> dg(n);
  for (int c = 0; c < n; ++c) {
    auto at = [&](double s) {
      SVec y = x;
      y[c] += s;
      return m.evaluate(y);
    };
    dg[c] = (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h);
  }
  const SMat ginv = m.evaluate(x).inverse();
  Christoffel out;
  out.dim = n;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        out(k, i, j) = 0.5 * s;
      }
  return out;
}

double fd_log_factor_laplacian_term(const MetricModel& m, const SVec& x, double h, SVec& grad) {
  const int n = m.dim();
  auto u = [&](const SVec& y) { return m.log_factor(y, 0).v; };
  double lap = 0;
  grad = SVec::Zero(n);
  for (int a = 0; a < n; ++a) {
    SVec e = SVec::Unit(n, a) * h;
    lap += (-u(x + 2 * e) + 16 * u(x + e) - 30 * u(x) + 16 * u(x - e) - u(x - 2 * e)) / (12 * h * h);
    grad[a] = (-u(x + 2 * e) + 8 * u(x + e) - 8 * u(x - e) + u(x - 2 * e)) / (12 * h);
  }
  return lap;
}

// R = -e^{-2u} (2(m-1) Lap u + (m-2)(m-1) |grad u|^2) for g = e^{2u} delta.
double conformal_scalar_oracle(const MetricModel& m, const SVec& x) {
  SVec grad;
  const double lap = fd_log_factor_laplacian_term(m, x, 1e-3, grad);
  const int d = m.dim();
  const double u = m.log_factor(x, 0).v;
  return -std::exp(-2 * u) * (2.0 * (d - 1) * lap + (d - 2.0) * (d - 1.0) * grad.squaredNorm());
}

}  // namespace

TEST_CASE("christoffels vanish for flat metric and at the space-form origin") {
  const SVec x = (SVec(3) << 0.3, -0.2, 0.7).finished();
  const Christoffel flat = christoffels(MetricModel::flat(3), x);
  for (double v : flat.values) CHECK(v == 0.0);
  const Christoffel sf = christoffels(MetricModel::space_form(3, 1.0), SVec::Zero(3));
  for (double v : sf.values) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("christoffels match finite-difference oracle on conformal_bump and custom metrics") {
  std::mt19937 rng(11);
  const MetricModel bump = testing::skewed_bump();
  CustomParams cp;
  cp.log_factor = {{0.1, {2, 0, 0, 0}}, {-0.05, {0, 1, 1, 0}}};
  cp.perturbation = {{{0, 1}, {{0.07, {1, 0, 1, 0}}}}, {{2, 2}, {{0.1, {0, 2, 0, 0}}}}};
  cp.domain_radius = 1.0;
  const MetricModel custom = MetricModel::custom(3, cp);
  for (const MetricModel* m : {&bump, &custom}) {
    for (int trial = 0; trial < 5; ++trial) {
      const SVec x = testing::random_point(rng, 3, 0.5);
      const Christoffel got = christoffels(*m, x);
      const Christoffel ref = fd_christoffels(*m, x);
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            CHECK(std::abs(got(k, i, j) - ref(k, i, j)) < 1e-8);
            CHECK(got(k, i, j) == doctest::Approx(got(k, j, i)).epsilon(1e-14));
          }
    }
  }
}

TEST_CASE("degenerate metric is reported") {
  CustomParams cp;
  cp.perturbation = {{{0, 0}, {{-1.0, {0, 0, 0, 0}}}}};
  const MetricModel m = MetricModel::custom(3, cp);
  CHECK_THROWS_AS(christoffels(m, SVec::Zero(3)), DegenerateMetricError);
}

TEST_CASE("curvature of flat and space forms") {
  const CurvatureAtPoint flat = curvature_at(MetricModel::flat(3), SVec::Zero(3));
  CHECK(flat.riemann.max_abs() == 0.0);
  CHECK(flat.scalar == 0.0);

  for (int dim : {3, 4}) {
    for (double kappa : {1.0, -1.0, 0.5}) {
      const MetricModel m = MetricModel::space_form(dim, kappa);
      const SVec p = 0.3 * SVec::Ones(dim);
      const CurvatureAtPoint c = curvature_at(m, p);
      CHECK(c.scalar == doctest::Approx(dim * (dim - 1) * kappa).epsilon(1e-10));
      double dev = 0;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          for (int k = 0; k < dim; ++k)
            for (int l = 0; l < dim; ++l) {
              const double expect = kappa * ((i == k) * (j == l) - (i == l) * (j == k));
              dev = std::max(dev, std::abs(c.riemann(i, j, k, l) - expect));
            }
      CHECK(dev < 1e-10);
      CHECK(c.riemann_grad.max_abs() < 1e-9);
      CHECK(c.warnings.empty());
      // frame is g-orthonormal
      const SMat g = m.evaluate(p);
      CHECK((c.frame.transpose() * g * c.frame - SMat::Identity(dim, dim)).norm() < 1e-14);
    }
  }
}

TEST_CASE("conformal_bump with zero amplitude reproduces the flat output") {
  BumpParams b;
  b.amplitude = 0.0;
  b.center = SVec::Zero(3);
  b.quadratic = SMat::Identity(3, 3);
  const MetricModel m = MetricModel::conformal_bump(3, b);
  const SVec p = (SVec(3) << 0.1, 0.2, -0.3).finished();
  const CurvatureAtPoint c = curvature_at(m, p);
  const CurvatureAtPoint f = curvature_at(MetricModel::flat(3), p);
  CHECK(c.riemann.data() == f.riemann.data());
  CHECK(c.scalar == f.scalar);
}

TEST_CASE("bump curvature satisfies symmetries and matches conformal scalar-curvature formula") {
  std::mt19937 rng(5);
  for (int dim : {3, 4}) {
    const MetricModel m = testing::skewed_bump(dim);
    for (int trial = 0; trial < 4; ++trial) {
      const SVec p = testing::random_point(rng, dim, 0.6);
      const CurvatureAtPoint c = curvature_at(m, p);
      CHECK(c.residuals.max() < 1e-7);
      CHECK(c.warnings.empty());
      CHECK(std::abs(c.scalar - conformal_scalar_oracle(m, p)) < 1e-6);
      // nabla R contracted: frame gradient of scalar curvature vs FD of the chart scalar
      const double h = 1e-4;
      for (int a = 0; a < dim; ++a) {
        const SVec e = c.frame.col(a);
        const double fd = (curvature_at(m, p + h * e).scalar - curvature_at(m, p - h * e).scalar) / (2 * h);
        CHECK(std::abs(fd - c.scalar_grad[a]) < 1e-6);
      }
      // contracted second Bianchi: div Ric = dR / 2
      for (int j = 0; j < dim; ++j) {
        double div = 0;
        for (int i = 0; i < dim; ++i)
          for (int k = 0; k < dim; ++k) div += c.riemann_grad(i, k, i, k, j);
        CHECK(std::abs(div - 0.5 * c.scalar_grad[j]) < 1e-9);
      }
    }
  }
}

TEST_CASE("generic connection path agrees with the conformal fast path") {
  const MetricModel m = testing::skewed_bump();
  DerivativeOracle fd;
  fd.kind = DerivativeOracle::Kind::finite_difference;
  fd.step = 1e-3;
  const MetricModel mfd = m.with_oracle(fd);
  const SVec p = (SVec(3) << 0.2, -0.1, 0.15).finished();
  const CurvatureAtPoint a = curvature_at(m, p);
  const CurvatureAtPoint b = curvature_at(mfd, p);
  CHECK(b.residuals.max() < 1e-5);
  CHECK(std::abs(a.scalar - b.scalar) < 1e-6);
  double dev = 0;
  for (std::size_t i = 0; i < a.riemann_grad.size(); ++i)
    dev = std::max(dev, std::abs(a.riemann_grad[i] - b.riemann_grad[i]));
  CHECK(dev < 1e-5);

  const SVec v = (SVec(3) << 0.1, 0.05, -0.08).finished();
  const GeodesicEnd ea = integrate_geodesic(m, p, v, 0, true);
  const GeodesicEnd eb = integrate_geodesic(mfd, p, v, 0, true);
  CHECK((ea.position - eb.position).norm() < 1e-10);
  CHECK((ea.jacobian - eb.jacobian).norm() < 1e-8);
}

TEST_CASE("finite-difference curvature converges at fourth order") {
  const MetricModel m = MetricModel::space_form(3, 1.0);
  const SVec p = (SVec(3) << 0.4, 0.1, -0.2).finished();
  auto error = [&](double h) {
    DerivativeOracle fd;
    fd.kind = DerivativeOracle::Kind::finite_difference;
    fd.step = h;
    return std::abs(curvature_at(m.with_oracle(fd), p, 1.0).scalar - 6.0);
  };
  const double ratio = error(0.08) / error(0.04);
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("insufficient oracle order is a capability error") {
  DerivativeOracle o;
  o.max_order = 2;
  const MetricModel m = MetricModel::space_form(3, 1.0).with_oracle(o);
  CHECK_THROWS_AS(curvature_at(m, SVec::Zero(3)), CapabilityError);
}

TEST_CASE("exp_map in flat space is translation") {
  const MetricModel m = MetricModel::flat(3);
  const SVec p = (SVec(3) << 1.0, 2.0, 3.0).finished();
  const SVec v = (SVec(3) << 0.3, -0.1, 0.5).finished();
  const SVec q = exp_map(m, p, v);
  CHECK((q - (p + v)).norm() < 1e-13);
  CHECK(exp_map(m, p, SVec::Zero(3)) == p);
  // reversibility
  CHECK((exp_map(m, q, -v) - p).norm() < 1e-13);
}

TEST_CASE("exp_map on space forms reproduces the model distance and conserves energy") {
  std::mt19937 rng(3);
  for (double kappa : {1.0, -1.0}) {
    const MetricModel m = MetricModel::space_form(3, kappa);
    for (int trial = 0; trial < 5; ++trial) {
      const SVec p = testing::random_point(rng, 3, 0.4);
      SVec dir = testing::random_point(rng, 3, 1.0);
      const SMat g = m.evaluate(p);
      const double rho = 0.2;
      dir *= rho / std::sqrt(dir.dot(g * dir));
      const GeodesicEnd end = integrate_geodesic(m, p, dir, 0, false);
      CHECK(std::abs(testing::space_form_distance(kappa, p, end.position) - rho) < 1e-10);
      CHECK(end.energy_drift < 1e-8);
      // log inverts exp
      const SVec back = log_map(m, p, end.position);
      CHECK((back - dir).norm() < 1e-11);
    }
  }
}

TEST_CASE("exp_map out of domain and over budget") {
  // the bump chart is the ball of radius 4 about the center
  const MetricModel bump = testing::skewed_bump();
  const SVec p = (SVec(3) << 3.8, 0.0, 0.0).finished();
  try {
    (void)exp_map(bump, p, (SVec(3) << 0.5, 0.0, 0.0).finished());
    FAIL("expected out-of-domain");
  } catch (const OutOfDomainError& e) {
    CHECK(e.exit_time() > 0.0);
    CHECK(e.exit_time() == doctest::Approx(0.4).epsilon(0.05));
  }
  const MetricModel sphere = MetricModel::space_form(3, 1.0);
  CHECK_THROWS_AS(exp_map(sphere, SVec::Zero(3), (SVec(3) << 3.0, 0, 0).finished()), ContractError);
}

TEST_CASE("the bump center is a nondegenerate critical point of scalar curvature") {
  const MetricModel m = testing::skewed_bump();
  const CriticalPoint cp = refine_scalar_critical_point(m, (SVec(3) << 0.01, -0.01, 0.02).finished());
  CHECK(cp.point.norm() < 1e-8);
  CHECK(cp.hessian_eigenvalues.cwiseAbs().minCoeff() > 0.1);
}
