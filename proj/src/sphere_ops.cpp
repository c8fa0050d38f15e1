#include <cmath>
#include <iomanip>
#include <sstream>

#include "kleaf/errors.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

namespace {

void require_same_grid(const SphereField& a, const SphereField& b) {
  if (a.grid != b.grid || a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
    throw ContractError("sphere fields live on different grids or have different shapes");
}

void require_scalar(const SphereField& f, const char* op) {
  if (!f.is_scalar() || f.channels() != 1) throw ContractError(std::string(op) + ": scalar field expected");
}

const Eigen::MatrixXd& coefficients_of(const SphereField& f, Eigen::MatrixXd& storage) {
  if (f.coefficients) return *f.coefficients;
  storage = analysis(f);
  return storage;
}

}  // namespace

SphereField::SphereField(GridPtr g, Eigen::MatrixXd v, std::vector<int> s)
    : grid(std::move(g)), values(std::move(v)), shape(std::move(s)) {
  if (!grid) throw ContractError("sphere field without grid");
  if (values.rows() != grid->size()) throw ContractError("sphere field: one row per node expected");
  int count = 1;
  for (int e : shape) count *= e;
  if (count != values.cols()) throw ContractError("sphere field: shape does not match channel count");
}

Eigen::VectorXd SphereField::scalar() const {
  require_scalar(*this, "scalar()");
  return values.col(0);
}

SphereField SphereField::from_coefficients(GridPtr grid, const Eigen::MatrixXd& coeffs,
                                           std::vector<int> shape) {
  const HarmonicBasis& basis = grid->basis();
  if (coeffs.rows() != basis.size()) throw ContractError("coefficient count does not match the basis");
  SphereField f(grid, basis.values() * coeffs, std::move(shape));
  f.coefficients = coeffs;
  return f;
}

SphereField SphereField::constant(GridPtr grid, double c) {
  const int n = grid->size();
  return SphereField(std::move(grid), Eigen::MatrixXd::Constant(n, 1, c));
}

SphereField operator+(const SphereField& a, const SphereField& b) {
  require_same_grid(a, b);
  SphereField r(a.grid, a.values + b.values, a.shape);
  if (a.coefficients && b.coefficients) r.coefficients = *a.coefficients + *b.coefficients;
  return r;
}

SphereField operator-(const SphereField& a, const SphereField& b) { return a + (-1.0) * b; }

SphereField operator*(double s, const SphereField& a) {
  SphereField r(a.grid, s * a.values, a.shape);
  if (a.coefficients) r.coefficients = s * *a.coefficients;
  return r;
}

double quad(const SphereField& field) {
  require_scalar(field, "quad");
  return field.grid->weights().dot(field.values.col(0));
}

Eigen::VectorXd quad_channels(const SphereField& field) {
  return field.values.transpose() * field.grid->weights();
}

Eigen::MatrixXd analysis(const SphereField& field) {
  const HarmonicBasis& basis = field.grid->basis();
  return basis.values().transpose() * (field.grid->weights().asDiagonal() * field.values);
}

SphereField with_coefficients(const SphereField& field) {
  SphereField out = field;
  if (!out.coefficients) out.coefficients = analysis(field);
  const HarmonicBasis& basis = field.grid->basis();
  const int L = field.grid->band_limit();
  double total = 0.0, high = 0.0;
  for (int m = 0; m < basis.size(); ++m) {
    const double e = out.coefficients->row(m).squaredNorm();
    total += e;
    if (basis.degree(m) > L - 2) high += e;
  }
  if (total > 0.0 && high > kAliasingThreshold * total) {
    std::ostringstream os;
    os << "aliasing: relative energy " << high / total << " above degree " << L - 2;
    out.warnings.push_back(os.str());
  }
  return out;
}

KernelSplit project_kernel(const SphereField& field) {
  require_scalar(field, "project_kernel");
  const SphereGrid& g = *field.grid;
  const int d = g.ambient_dim();
  KernelSplit out;
  out.coefficients = SVec::Zero(d);
  Eigen::VectorXd perp = field.values.col(0);
  for (int i = 0; i < d; ++i) {
    const Eigen::VectorXd xi = g.nodes().col(i);
    const double num = g.weights().dot(field.values.col(0).cwiseProduct(xi));
    const double den = g.weights().dot(xi.cwiseAbs2());
    out.coefficients[i] = num / den;
  }
  for (int i = 0; i < d; ++i) perp -= out.coefficients[i] * g.nodes().col(i);
  out.perp = SphereField(field.grid, perp);
  return out;
}

SphereField laplace_beltrami(const SphereField& field) {
  const SphereField f = with_coefficients(field);
  const HarmonicBasis& basis = field.grid->basis();
  const int n = field.grid->n();
  Eigen::MatrixXd c = *f.coefficients;
  for (int m = 0; m < basis.size(); ++m) {
    const int l = basis.degree(m);
    c.row(m) *= -static_cast<double>(l * (l + n - 1));
  }
  SphereField out = SphereField::from_coefficients(field.grid, c, field.shape);
  out.warnings = f.warnings;
  return out;
}

SphereField solve_helmholtz(const SphereField& field, double kernel_tol) {
  const SphereField f = with_coefficients(field);
  const HarmonicBasis& basis = field.grid->basis();
  const int n = field.grid->n();
  Eigen::MatrixXd c = *f.coefficients;
  double kernel = 0.0;
  for (int ch = 0; ch < c.cols(); ++ch) {
    double k2 = 0.0;
    for (int m = 0; m < basis.size(); ++m)
      if (basis.degree(m) == 1) k2 += c(m, ch) * c(m, ch);
    kernel = std::max(kernel, std::sqrt(k2));
  }
  if (kernel > kernel_tol) {
    std::ostringstream os;
    os << "right-hand side has kernel component of norm " << kernel;
    throw SolvabilityError(os.str(), kernel);
  }
  for (int m = 0; m < basis.size(); ++m) {
    const int l = basis.degree(m);
    if (l == 1)
      c.row(m).setZero();
    else
      c.row(m) /= static_cast<double>(n - l * (l + n - 1));
  }
  SphereField out = SphereField::from_coefficients(field.grid, c, field.shape);
  out.warnings = f.warnings;
  return out;
}

std::vector<Eigen::MatrixXd> tangential_gradient(const SphereField& field) {
  Eigen::MatrixXd storage;
  const Eigen::MatrixXd& c = coefficients_of(field, storage);
  std::vector<Eigen::MatrixXd> out;
  for (const Eigen::MatrixXd& g : field.grid->basis().gradients()) out.push_back(g * c);
  return out;
}

TangentialDerivatives tangential_derivatives(const SphereField& field) {
  require_scalar(field, "tangential_derivatives");
  const SphereField f = with_coefficients(field);
  const HarmonicBasis& basis = field.grid->basis();
  const int n = field.grid->n(), N = field.grid->size();
  Eigen::MatrixXd grad(N, n), hess(N, n * n);
  const auto& gtab = basis.gradients();
  for (int a = 0; a < n; ++a) grad.col(a) = gtab[a] * f.coefficients->col(0);
  const auto& htab = basis.hessians();
  for (int ab = 0; ab < n * n; ++ab) hess.col(ab) = htab[ab] * f.coefficients->col(0);
  TangentialDerivatives out{SphereField(field.grid, grad, {n}), SphereField(field.grid, hess, {n, n})};
  out.gradient.warnings = f.warnings;
  out.hessian.warnings = f.warnings;
  return out;
}

double interpolate(const SphereField& field, const SVec& theta) {
  require_scalar(field, "interpolate");
  Eigen::MatrixXd storage;
  const Eigen::MatrixXd& c = coefficients_of(field, storage);
  return field.grid->basis().evaluate(theta).dot(c.col(0));
}

void write_csv(std::ostream& os, const SphereField& field) {
  const SphereGrid& g = *field.grid;
  os << "index";
  for (int i = 0; i < g.ambient_dim(); ++i) os << ",theta_" << i;
  os << ",weight";
  for (int c = 0; c < field.channels(); ++c) os << ",value_" << c;
  os << "\n" << std::setprecision(17);
  for (int k = 0; k < g.size(); ++k) {
    os << k;
    for (int i = 0; i < g.ambient_dim(); ++i) os << "," << g.nodes()(k, i);
    os << "," << g.weights()[k];
    for (int c = 0; c < field.channels(); ++c) os << "," << field.values(k, c);
    os << "\n";
  }
}

}  // namespace kleaf
