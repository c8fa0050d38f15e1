#pragma once

// Truncated multivariate Taylor jets (value plus partial derivatives up to
// order three) in at most four variables. Used to obtain exact partials of
// the metric families and of solid harmonics without hand-derived formulas.

#include <array>
#include <cmath>

namespace kleaf {

inline constexpr int kMaxJetDim = 4;

struct Jet {
  int dim = 0;
  int order = 0;
  double v = 0.0;
  std::array<double, kMaxJetDim> d{};
  std::array<double, kMaxJetDim * kMaxJetDim> dd{};
  std::array<double, kMaxJetDim * kMaxJetDim * kMaxJetDim> ddd{};

  static Jet constant(int dim, int order, double c) {
    Jet j;
    j.dim = dim;
    j.order = order;
    j.v = c;
    return j;
  }

  /// Coordinate function x_i evaluated at `value`.
  static Jet variable(int dim, int order, double value, int i) {
    Jet j = constant(dim, order, value);
    if (order >= 1) j.d[i] = 1.0;
    return j;
  }

  double grad(int a) const { return d[a]; }
  double hess(int a, int b) const { return dd[a * kMaxJetDim + b]; }
  double third(int a, int b, int c) const {
    return ddd[(a * kMaxJetDim + b) * kMaxJetDim + c];
  }
  double& hess(int a, int b) { return dd[a * kMaxJetDim + b]; }
  double& third(int a, int b, int c) { return ddd[(a * kMaxJetDim + b) * kMaxJetDim + c]; }
};

inline int common_order(const Jet& a, const Jet& b) { return a.order < b.order ? a.order : b.order; }

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(a.dim, common_order(a, b), a.v + b.v);
  const int n = a.dim;
  if (r.order >= 1)
    for (int i = 0; i < n; ++i) r.d[i] = a.d[i] + b.d[i];
  if (r.order >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.hess(i, j) = a.hess(i, j) + b.hess(i, j);
  if (r.order >= 3)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) r.third(i, j, k) = a.third(i, j, k) + b.third(i, j, k);
  return r;
}

inline Jet operator*(double s, const Jet& a) {
  Jet r = a;
  r.v *= s;
  for (auto& x : r.d) x *= s;
  for (auto& x : r.dd) x *= s;
  for (auto& x : r.ddd) x *= s;
  return r;
}
inline Jet operator*(const Jet& a, double s) { return s * a; }
inline Jet operator-(const Jet& a) { return -1.0 * a; }
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator+(const Jet& a, double c) {
  Jet r = a;
  r.v += c;
  return r;
}
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return a + (-c); }
inline Jet operator-(double c, const Jet& a) { return (-a) + c; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r = Jet::constant(a.dim, common_order(a, b), a.v * b.v);
  const int n = a.dim;
  if (r.order >= 1)
    for (int i = 0; i < n; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  if (r.order >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        r.hess(i, j) = a.hess(i, j) * b.v + a.d[i] * b.d[j] + a.d[j] * b.d[i] + a.v * b.hess(i, j);
  if (r.order >= 3)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.third(i, j, k) = a.third(i, j, k) * b.v + a.hess(i, j) * b.d[k] +
                             a.hess(i, k) * b.d[j] + a.hess(j, k) * b.d[i] +
                             a.d[i] * b.hess(j, k) + a.d[j] * b.hess(i, k) +
                             a.d[k] * b.hess(i, j) + a.v * b.third(i, j, k);
  return r;
}

/// phi(f) given phi and its first three derivatives at f.v (chain rule).
inline Jet compose(const Jet& f, double p0, double p1, double p2, double p3) {
  Jet r = Jet::constant(f.dim, f.order, p0);
  const int n = f.dim;
  if (r.order >= 1)
    for (int i = 0; i < n; ++i) r.d[i] = p1 * f.d[i];
  if (r.order >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.hess(i, j) = p2 * f.d[i] * f.d[j] + p1 * f.hess(i, j);
  if (r.order >= 3)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          r.third(i, j, k) = p3 * f.d[i] * f.d[j] * f.d[k] +
                             p2 * (f.hess(i, j) * f.d[k] + f.hess(i, k) * f.d[j] +
                                   f.hess(j, k) * f.d[i]) +
                             p1 * f.third(i, j, k);
  return r;
}

inline Jet exp(const Jet& f) {
  const double e = std::exp(f.v);
  return compose(f, e, e, e, e);
}

inline Jet log(const Jet& f) {
  const double x = f.v;
  return compose(f, std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
}

inline Jet reciprocal(const Jet& f) {
  const double x = f.v;
  const double r = 1.0 / x;
  return compose(f, r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(const Jet& a, double s) { return (1.0 / s) * a; }

inline Jet pow(const Jet& f, double e) {
  const double x = f.v;
  return compose(f, std::pow(x, e), e * std::pow(x, e - 1.0),
                 e * (e - 1.0) * std::pow(x, e - 2.0),
                 e * (e - 1.0) * (e - 2.0) * std::pow(x, e - 3.0));
}

/// Partial derivative along variable i; the result has one order less.
inline Jet partial(const Jet& f, int i) {
  Jet r = Jet::constant(f.dim, f.order > 0 ? f.order - 1 : 0, f.order >= 1 ? f.d[i] : 0.0);
  const int n = f.dim;
  if (r.order >= 1)
    for (int a = 0; a < n; ++a) r.d[a] = f.hess(i, a);
  if (r.order >= 2)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r.hess(a, b) = f.third(i, a, b);
  return r;
}

inline Jet truncate(const Jet& f, int order) {
  Jet r = f;
  r.order = order < f.order ? order : f.order;
  if (r.order < 3) r.ddd.fill(0.0);
  if (r.order < 2) r.dd.fill(0.0);
  if (r.order < 1) r.d.fill(0.0);
  return r;
}

}  // namespace kleaf
