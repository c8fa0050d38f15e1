#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "connection.hpp"
#include "kleaf/errors.hpp"
#include "kleaf/manifold.hpp"

namespace kleaf {

namespace {

struct GeodesicState {
  SVec x;
  SVec v;
  SMat j;  // d x / d v0
  SMat k;  // d v / d v0
};

/// Right-hand side of the geodesic ODE and its variational equation.
class GeodesicField {
 public:
  GeodesicField(const MetricModel& metric, bool variational)
      : metric_(metric), variational_(variational), fast_(metric.has_conformal_fast_path()) {}

  GeodesicState operator()(const GeodesicState& s) const {
    GeodesicState d;
    d.x = s.v;
    SMat ax, av;
    if (fast_)
      conformal(s, d.v, ax, av);
    else
      generic(s, d.v, ax, av);
    if (variational_) {
      d.j = s.k;
      d.k = ax * s.j + av * s.k;
    }
    return d;
  }

 private:
  // g = exp(2u) delta: Gamma(v,v)^k = 2 (du.v) v^k - |v|^2 du^k
  void conformal(const GeodesicState& s, SVec& acc, SMat& ax, SMat& av) const {
    const int n = metric_.dim();
    const Jet u = metric_.log_factor(s.x, variational_ ? 2 : 1);
    SVec du(n);
    for (int i = 0; i < n; ++i) du[i] = u.d[i];
    const double uv = du.dot(s.v);
    const double vv = s.v.squaredNorm();
    acc = -2.0 * uv * s.v + vv * du;
    if (!variational_) return;
    SMat h(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) h(a, b) = u.hess(a, b);
    const SVec hv = h * s.v;
    av = -2.0 * s.v * du.transpose() - 2.0 * uv * SMat::Identity(n, n) + 2.0 * du * s.v.transpose();
    ax = -2.0 * s.v * hv.transpose() + vv * h;
  }

  void generic(const GeodesicState& s, SVec& acc, SMat& ax, SMat& av) const {
    const int n = metric_.dim();
    const auto gamma = detail::christoffel_jets(metric_, s.x, variational_ ? 1 : 0);
    acc = SVec::Zero(n);
    if (variational_) {
      ax = SMat::Zero(n, n);
      av = SMat::Zero(n, n);
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const Jet& g = gamma[(k * 4 + i) * 4 + j];
          acc[k] -= g.v * s.v[i] * s.v[j];
          if (variational_) {
            av(k, j) -= 2.0 * g.v * s.v[i];
            for (int c = 0; c < n; ++c) ax(k, c) -= g.d[c] * s.v[i] * s.v[j];
          }
        }
  }

  const MetricModel& metric_;
  bool variational_;
  bool fast_;
};

GeodesicState axpy(const GeodesicState& s, double h, const GeodesicState& d, bool variational) {
  GeodesicState r;
  r.x = s.x + h * d.x;
  r.v = s.v + h * d.v;
  if (variational) {
    r.j = s.j + h * d.j;
    r.k = s.k + h * d.k;
  }
  return r;
}

double energy(const MetricModel& metric, const SVec& x, const SVec& v) {
  return v.dot(metric.evaluate(x) * v);
}

}  // namespace

int default_geodesic_steps(double speed) {
  return std::max(64, static_cast<int>(std::ceil(speed / 0.01)));
}

GeodesicEnd integrate_geodesic(const MetricModel& metric, const SVec& p, const SVec& v, int steps,
                               bool with_jacobian) {
  const int n = metric.dim();
  if (p.size() != n || v.size() != n) throw ContractError("geodesic: dimension mismatch");
  if (!metric.in_domain(p)) throw OutOfDomainError("geodesic start point outside chart domain", 0.0);
  const double e0 = energy(metric, p, v);
  const double speed = std::sqrt(e0);
  if (speed > metric.injectivity_budget())
    throw ContractError("exp_map argument length exceeds the chart injectivity budget");
  if (metric.family() == MetricFamily::flat) {
    GeodesicEnd out;
    out.position = p + v;
    out.velocity = v;
    if (with_jacobian) out.jacobian = SMat::Identity(n, n);
    return out;
  }
  if (steps <= 0) steps = default_geodesic_steps(speed);

  GeodesicField field(metric, with_jacobian);
  GeodesicState s;
  s.x = p;
  s.v = v;
  if (with_jacobian) {
    s.j = SMat::Zero(n, n);
    s.k = SMat::Identity(n, n);
  }
  const double h = 1.0 / steps;
  for (int step = 0; step < steps; ++step) {
    const GeodesicState k1 = field(s);
    const GeodesicState s2 = axpy(s, 0.5 * h, k1, with_jacobian);
    if (!metric.in_domain(s2.x)) throw OutOfDomainError("geodesic left the chart domain", (step + 0.5) * h);
    const GeodesicState k2 = field(s2);
    const GeodesicState k3 = field(axpy(s, 0.5 * h, k2, with_jacobian));
    const GeodesicState s4 = axpy(s, h, k3, with_jacobian);
    if (!metric.in_domain(s4.x)) throw OutOfDomainError("geodesic left the chart domain", (step + 1) * h);
    const GeodesicState k4 = field(s4);
    s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.v += (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    if (with_jacobian) {
      s.j += (h / 6.0) * (k1.j + 2.0 * k2.j + 2.0 * k3.j + k4.j);
      s.k += (h / 6.0) * (k1.k + 2.0 * k2.k + 2.0 * k3.k + k4.k);
    }
    if (!metric.in_domain(s.x)) throw OutOfDomainError("geodesic left the chart domain", (step + 1) * h);
  }
  GeodesicEnd out;
  out.position = s.x;
  out.velocity = s.v;
  if (with_jacobian) out.jacobian = s.j;
  const double e1 = energy(metric, s.x, s.v);
  out.energy_drift = e0 > 0.0 ? std::abs(e1 - e0) / e0 : std::abs(e1);
  return out;
}

SVec exp_map(const MetricModel& metric, const SVec& p, const SVec& v, int steps) {
  if (v.isZero(0.0)) return p;
  return integrate_geodesic(metric, p, v, steps, false).position;
}

SVec log_map(const MetricModel& metric, const SVec& p, const SVec& q, int steps) {
  SVec v = q - p;
  if (v.isZero(0.0)) return v;
  double last = 0.0;
  for (int it = 0; it < 30; ++it) {
    const GeodesicEnd end = integrate_geodesic(metric, p, v, steps, true);
    const SVec r = q - end.position;
    const SVec dv = end.jacobian.fullPivLu().solve(r);
    v += dv;
    last = dv.norm();
    if (last <= 1e-15 * (1.0 + v.norm())) return v;
  }
  if (last <= 1e-12 * (1.0 + v.norm())) return v;
  throw ConvergenceError("log_map: Newton inversion of exp did not converge", {last});
}

}  // namespace kleaf
