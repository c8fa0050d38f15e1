#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "connection.hpp"
#include "kleaf/errors.hpp"
#include "kleaf/manifold.hpp"

namespace kleaf {

Tensor::Tensor(int dim, int rank) : dim_(dim), rank_(rank) {
  std::size_t n = 1;
  for (int r = 0; r < rank; ++r) n *= static_cast<std::size_t>(dim);
  data_.assign(n, 0.0);
}

double& Tensor::at(std::initializer_list<int> idx) {
  std::size_t off = 0;
  for (int i : idx) off = off * dim_ + i;
  return data_[off];
}

double Tensor::at(std::initializer_list<int> idx) const {
  std::size_t off = 0;
  for (int i : idx) off = off * dim_ + i;
  return data_[off];
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double CurvatureResiduals::max() const {
  return std::max({antisym_first, antisym_second, pair_symmetry, first_bianchi, second_bianchi,
                   gradient_symmetries});
}

namespace detail {

std::array<Jet, 16> invert_metric_jet(const MetricJet& g, int order) {
  const int n = g.dim;
  SMat g0(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g0(i, j) = g(i, j).v;
  Eigen::SelfAdjointEigenSolver<SMat> eig(g0, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-13 * std::max(hi, 1.0)))
    throw DegenerateMetricError("metric is not positive definite (min eigenvalue " +
                                std::to_string(lo) + ")");

  // Gauss-Jordan on [g | I] with jet entries; pivoting on values.
  std::array<Jet, 16> a{};
  std::array<Jet, 16> inv{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a[i * 4 + j] = truncate(g(i, j), order);
      inv[i * 4 + j] = Jet::constant(n, order, i == j ? 1.0 : 0.0);
    }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * 4 + col].v) > std::abs(a[piv * 4 + col].v)) piv = r;
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(a[col * 4 + j], a[piv * 4 + j]);
        std::swap(inv[col * 4 + j], inv[piv * 4 + j]);
      }
    const Jet rinv = reciprocal(a[col * 4 + col]);
    for (int j = 0; j < n; ++j) {
      a[col * 4 + j] = a[col * 4 + j] * rinv;
      inv[col * 4 + j] = inv[col * 4 + j] * rinv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Jet f = a[r * 4 + col];
      for (int j = 0; j < n; ++j) {
        a[r * 4 + j] = a[r * 4 + j] - f * a[col * 4 + j];
        inv[r * 4 + j] = inv[r * 4 + j] - f * inv[col * 4 + j];
      }
    }
  }
  return inv;
}

std::array<Jet, 64> christoffel_jets(const MetricModel& metric, const SVec& x, int order) {
  const int n = metric.dim();
  const MetricJet g = metric.jet(x, order + 1);
  const auto ginv = invert_metric_jet(g, order);
  // dg[(c*4+i)*4+j] = d_c g_ij as a jet of order `order`
  std::array<Jet, 64> dg{};
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dg[(c * 4 + i) * 4 + j] = partial(g(i, j), c);
  std::array<Jet, 64> gamma{};
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Jet s = Jet::constant(n, order, 0.0);
        for (int l = 0; l < n; ++l) {
          const Jet bracket = dg[(i * 4 + j) * 4 + l] + dg[(j * 4 + i) * 4 + l] - dg[(l * 4 + i) * 4 + j];
          s = s + ginv[k * 4 + l] * bracket;
        }
        s = 0.5 * s;
        gamma[(k * 4 + i) * 4 + j] = s;
        gamma[(k * 4 + j) * 4 + i] = s;
      }
  return gamma;
}

}  // namespace detail

Christoffel christoffels(const MetricModel& metric, const SVec& x) {
  if (x.size() != metric.dim()) throw ContractError("christoffels: point dimension mismatch");
  const int n = metric.dim();
  Christoffel out;
  out.dim = n;
  if (metric.has_conformal_fast_path()) {
    const Jet u = metric.log_factor(x, 1);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out(k, i, j) = (k == i ? u.d[j] : 0.0) + (k == j ? u.d[i] : 0.0) - (i == j ? u.d[k] : 0.0);
    return out;
  }
  const auto gamma = detail::christoffel_jets(metric, x, 0);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(k, i, j) = gamma[(k * 4 + i) * 4 + j].v;
  return out;
}

SMat orthonormal_frame(const MetricModel& metric, const SVec& p) {
  const SMat g = metric.evaluate(p);
  const int n = metric.dim();
  SMat e = SMat::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    SVec v = SVec::Unit(n, a);
    for (int b = 0; b < a; ++b) v -= (e.col(b).dot(g * v)) * e.col(b);
    const double norm2 = v.dot(g * v);
    if (!(norm2 > 1e-300)) throw DegenerateMetricError("Gram-Schmidt failed: degenerate metric");
    e.col(a) = v / std::sqrt(norm2);
  }
  return e;
}

double default_curvature_tolerance(const MetricModel& metric) {
  return metric.oracle().kind == DerivativeOracle::Kind::analytic ? 1e-7 : 1e-5;
}

namespace {

// Contract each index of a coordinate tensor with the frame.
Tensor to_frame(const Tensor& t, const SMat& e) {
  const int n = t.dim();
  Tensor cur = t;
  for (int pos = 0; pos < t.rank(); ++pos) {
    std::size_t inner = 1;
    for (int r = pos + 1; r < t.rank(); ++r) inner *= n;
    std::size_t outer = cur.size() / (inner * n);
    Tensor next(n, t.rank());
    for (std::size_t o = 0; o < outer; ++o)
      for (int a = 0; a < n; ++a)
        for (std::size_t in = 0; in < inner; ++in) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += e(i, a) * cur[(o * n + i) * inner + in];
          next[(o * n + a) * inner + in] = s;
        }
    cur = std::move(next);
  }
  return cur;
}

CurvatureResiduals compute_residuals(const Tensor& r, const Tensor& dr) {
  const int n = r.dim();
  CurvatureResiduals res;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          res.antisym_first = std::max(res.antisym_first, std::abs(r(i, j, k, l) + r(j, i, k, l)));
          res.antisym_second = std::max(res.antisym_second, std::abs(r(i, j, k, l) + r(i, j, l, k)));
          res.pair_symmetry = std::max(res.pair_symmetry, std::abs(r(i, j, k, l) - r(k, l, i, j)));
          res.first_bianchi = std::max(
              res.first_bianchi, std::abs(r(i, j, k, l) + r(i, k, l, j) + r(i, l, j, k)));
        }
  if (dr.size() == 0) return res;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double x = dr(a, i, j, k, l);
            res.second_bianchi = std::max(
                res.second_bianchi, std::abs(x + dr(k, i, j, l, a) + dr(l, i, j, a, k)));
            res.gradient_symmetries = std::max(
                {res.gradient_symmetries, std::abs(x + dr(a, j, i, k, l)),
                 std::abs(x + dr(a, i, j, l, k)), std::abs(x - dr(a, k, l, i, j)),
                 std::abs(x + dr(a, i, k, l, j) + dr(a, i, l, j, k))});
          }
  return res;
}

}  // namespace

CurvatureAtPoint CurvatureAtPoint::from_tensors(Tensor riemann, Tensor riemann_grad) {
  const int n = riemann.dim();
  if (riemann.rank() != 4 || (riemann_grad.size() != 0 &&
                              (riemann_grad.rank() != 5 || riemann_grad.dim() != n)))
    throw ContractError("curvature tensors have wrong rank or dimension");
  CurvatureAtPoint c;
  c.frame = SMat::Identity(n, n);
  c.point = SVec::Zero(n);
  c.ricci = SMat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) c.ricci(i, j) += riemann(k, i, k, j);
  c.scalar = c.ricci.trace();
  c.scalar_grad = SVec::Zero(n);
  if (riemann_grad.size() != 0)
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) c.scalar_grad[a] += riemann_grad(a, k, i, k, i);
  c.residuals = compute_residuals(riemann, riemann_grad);
  c.riemann = std::move(riemann);
  c.riemann_grad = std::move(riemann_grad);
  return c;
}

double CurvatureAtPoint::rm(const SVec& x, const SVec& y, const SVec& z, const SVec& w) const {
  const int n = dim();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x[i] == 0.0) continue;
    for (int j = 0; j < n; ++j) {
      if (y[j] == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += riemann(i, j, k, l) * x[i] * y[j] * z[k] * w[l];
    }
  }
  return s;
}

double CurvatureAtPoint::ric(const SVec& x, const SVec& y) const { return x.dot(ricci * y); }

double CurvatureAtPoint::nabla_ric(const SVec& v, const SVec& x, const SVec& y) const {
  const int n = dim();
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double r = 0.0;
        for (int k = 0; k < n; ++k) r += riemann_grad(a, k, i, k, j);
        s += r * v[a] * x[i] * y[j];
      }
  return s;
}

CurvatureAtPoint curvature_at(const MetricModel& metric, const SVec& p, double tol) {
  if (p.size() != metric.dim()) throw ContractError("curvature_at: point dimension mismatch");
  if (metric.oracle().max_order < 3)
    throw CapabilityError("curvature_at needs third metric derivatives; oracle supports order " +
                          std::to_string(metric.oracle().max_order));
  const int n = metric.dim();
  const auto gamma = detail::christoffel_jets(metric, p, 2);
  const MetricJet g = metric.jet(p, 1);

  auto G = [&](int k, int i, int j) -> const Jet& { return gamma[(k * 4 + i) * 4 + j]; };

  // R^s_{ijl} with R(X_i,X_j)X_l = R^s_{ijl} X_s, jets of order 1
  std::vector<Jet> rup(static_cast<std::size_t>(n * n * n * n));
  auto RU = [&](int s, int i, int j, int l) -> Jet& { return rup[((s * n + i) * n + j) * n + l]; };
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          Jet r = partial(G(s, j, l), i) - partial(G(s, i, l), j);
          for (int t = 0; t < n; ++t)
            r = r + truncate(G(s, i, t), 1) * truncate(G(t, j, l), 1) -
                truncate(G(s, j, t), 1) * truncate(G(t, i, l), 1);
          RU(s, i, j, l) = r;
        }
  // Rm_{ijkl} = g(R(X_i,X_j)X_l, X_k) = g_{ks} R^s_{ijl}
  std::vector<Jet> rm(static_cast<std::size_t>(n * n * n * n));
  auto RM = [&](int i, int j, int k, int l) -> Jet& { return rm[((i * n + j) * n + k) * n + l]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          Jet s = Jet::constant(n, 1, 0.0);
          for (int t = 0; t < n; ++t) s = s + g(k, t) * RU(t, i, j, l);
          RM(i, j, k, l) = s;
        }

  Tensor coord_r(n, 4);
  Tensor coord_dr(n, 5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) coord_r(i, j, k, l) = RM(i, j, k, l).v;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double s = RM(i, j, k, l).d[a];
            for (int e = 0; e < n; ++e)
              s -= G(e, a, i).v * coord_r(e, j, k, l) + G(e, a, j).v * coord_r(i, e, k, l) +
                   G(e, a, k).v * coord_r(i, j, e, l) + G(e, a, l).v * coord_r(i, j, k, e);
            coord_dr(a, i, j, k, l) = s;
          }

  const SMat frame = orthonormal_frame(metric, p);
  CurvatureAtPoint c = CurvatureAtPoint::from_tensors(to_frame(coord_r, frame), to_frame(coord_dr, frame));
  c.point = p;
  c.frame = frame;

  const double tolerance = tol > 0.0 ? tol : default_curvature_tolerance(metric);
  const double scale = std::max(1.0, std::max(c.riemann.max_abs(), c.riemann_grad.max_abs()));
  if (c.residuals.max() > tolerance * scale) {
    std::ostringstream os;
    os << "curvature symmetry/Bianchi residual " << c.residuals.max() << " exceeds tolerance "
       << tolerance * scale;
    c.warnings.push_back(os.str());
  }
  return c;
}

double scalar_curvature(const MetricModel& metric, const SVec& p) {
  return curvature_at(metric, p).scalar;
}

CriticalPoint refine_scalar_critical_point(const MetricModel& metric, const SVec& guess,
                                           double tol, int max_iter) {
  const int n = metric.dim();
  auto chart_gradient = [&](const SVec& x) -> SVec {
    const CurvatureAtPoint c = curvature_at(metric, x);
    // frame gradient_a = E_a^i d_i R
    return c.frame.transpose().inverse() * c.scalar_grad;
  };
  auto hessian = [&](const SVec& x) -> SMat {
    const double h = 1e-4;
    SMat hs(n, n);
    for (int a = 0; a < n; ++a) {
      SVec xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      hs.col(a) = (chart_gradient(xp) - chart_gradient(xm)) / (2.0 * h);
    }
    return 0.5 * (hs + hs.transpose());
  };
  CriticalPoint out;
  out.point = guess;
  SVec grad = chart_gradient(guess);
  int it = 0;
  for (; it < max_iter && grad.norm() > tol; ++it) {
    const SMat hs = hessian(out.point);
    const SVec step = hs.fullPivLu().solve(grad);
    out.point -= step;
    grad = chart_gradient(out.point);
  }
  if (grad.norm() > tol)
    throw ConvergenceError("scalar-curvature critical point search did not converge", {grad.norm()});
  out.gradient = grad;
  out.iterations = it;
  const SMat hs = hessian(out.point);
  Eigen::SelfAdjointEigenSolver<SMat> eig(hs, Eigen::EigenvaluesOnly);
  out.hessian_eigenvalues = eig.eigenvalues();
  return out;
}

}  // namespace kleaf
