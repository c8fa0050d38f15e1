#pragma once

// Ambient Riemannian metric in a single chart: metric families, connection,
// curvature tensor with its covariant derivative, and the exponential map.

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kleaf/jet.hpp"
#include "kleaf/linalg.hpp"

namespace kleaf {

enum class MetricFamily { flat, space_form, conformal_bump, custom };

const char* to_string(MetricFamily family);

/// How partial derivatives of g_ij are obtained.
struct DerivativeOracle {
  enum class Kind { analytic, finite_difference };
  Kind kind = Kind::analytic;
  double step = 1e-3;  ///< FD step (in chart units)
  int accuracy = 4;    ///< FD accuracy order, 2 or 4
  int max_order = 3;   ///< highest derivative order the oracle supports
};

/// g = exp(2u) delta with u = amplitude * exp(-y^T Q y / 2) * (1 + skew * y0 y1 y2),
/// y = x - center. The cubic y0 y1 y2 is harmonic, so the center stays a
/// critical point of the scalar curvature while parity about it is broken.
struct BumpParams {
  double amplitude = 0.0;
  SVec center;
  SMat quadratic;
  double skew = 0.0;
  double domain_radius = 4.0;
};

struct PolynomialTerm {
  double coefficient = 0.0;
  std::array<int, kMaxAmbientDim> exponents{};
};
using Polynomial = std::vector<PolynomialTerm>;

/// g_ij = exp(2u) (delta_ij + P_ij) with polynomial u and P.
struct CustomParams {
  Polynomial log_factor;
  std::vector<std::pair<std::pair<int, int>, Polynomial>> perturbation;
  double domain_radius = 1.0;
};

/// Metric coefficients as jets at one point (symmetric storage, both halves filled).
struct MetricJet {
  int dim = 0;
  int order = 0;
  std::array<Jet, kMaxAmbientDim * kMaxAmbientDim> entries{};
  const Jet& operator()(int i, int j) const { return entries[i * kMaxAmbientDim + j]; }
  Jet& operator()(int i, int j) { return entries[i * kMaxAmbientDim + j]; }
};

class MetricModel {
 public:
  static MetricModel flat(int dim);
  /// Conformal model g = (1 + kappa |x|^2 / 4)^{-2} delta.
  static MetricModel space_form(int dim, double kappa);
  static MetricModel conformal_bump(int dim, BumpParams params);
  static MetricModel custom(int dim, CustomParams params);

  MetricModel with_oracle(DerivativeOracle oracle) const;

  int dim() const { return dim_; }
  MetricFamily family() const { return family_; }
  const DerivativeOracle& oracle() const { return oracle_; }
  double kappa() const { return kappa_; }
  const BumpParams& bump() const { return bump_; }

  SMat evaluate(const SVec& x) const;

  /// Metric jets through the configured oracle.
  MetricJet jet(const SVec& x, int order) const;

  /// True when g = exp(2u) delta and u is available analytically; enables
  /// closed-form Christoffel symbols in the geodesic integrator.
  bool has_conformal_fast_path() const;
  Jet log_factor(const SVec& x, int order) const;

  bool in_domain(const SVec& x) const;
  /// Largest admissible g-length of an exp_map argument.
  double injectivity_budget() const;

  std::string describe() const;

 private:
  MetricModel() = default;
  MetricJet analytic_jet(const SVec& x, int order) const;
  MetricJet finite_difference_jet(const SVec& x, int order) const;
  bool conformal_only() const;

  int dim_ = 0;
  MetricFamily family_ = MetricFamily::flat;
  DerivativeOracle oracle_;
  double kappa_ = 0.0;
  BumpParams bump_;
  std::shared_ptr<const CustomParams> custom_;
};

/// Gamma^k_ij stored as [k][i][j].
struct Christoffel {
  int dim = 0;
  std::array<double, 64> values{};
  double operator()(int k, int i, int j) const { return values[(k * 4 + i) * 4 + j]; }
  double& operator()(int k, int i, int j) { return values[(k * 4 + i) * 4 + j]; }
};

Christoffel christoffels(const MetricModel& metric, const SVec& x);

/// Dense tensor with `rank` indices each ranging over `dim`.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int dim, int rank);
  int dim() const { return dim_; }
  int rank() const { return rank_; }
  std::size_t size() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::initializer_list<int> idx);
  double at(std::initializer_list<int> idx) const;
  double operator()(int i, int j, int k, int l) const {
    return data_[((i * dim_ + j) * dim_ + k) * dim_ + l];
  }
  double& operator()(int i, int j, int k, int l) {
    return data_[((i * dim_ + j) * dim_ + k) * dim_ + l];
  }
  double operator()(int a, int i, int j, int k, int l) const {
    return data_[(((a * dim_ + i) * dim_ + j) * dim_ + k) * dim_ + l];
  }
  double& operator()(int a, int i, int j, int k, int l) {
    return data_[(((a * dim_ + i) * dim_ + j) * dim_ + k) * dim_ + l];
  }
  const std::vector<double>& data() const { return data_; }
  double max_abs() const;

 private:
  int dim_ = 0;
  int rank_ = 0;
  std::vector<double> data_;
};

/// Symmetry and Bianchi residuals (max abs).
struct CurvatureResiduals {
  double antisym_first = 0.0;   // R_ijkl + R_jikl
  double antisym_second = 0.0;  // R_ijkl + R_ijlk
  double pair_symmetry = 0.0;   // R_ijkl - R_klij
  double first_bianchi = 0.0;   // R_ijkl + R_iklj + R_iljk
  double second_bianchi = 0.0;  // (nabla_a R)_ijkl + (nabla_k R)_ijla + (nabla_l R)_ijak
  double gradient_symmetries = 0.0;  // Riemann symmetries of each nabla_a R
  double max() const;
};

/// Curvature data at a point in a g-orthonormal frame.
///
/// Index convention: riemann(i,j,k,l) = g(R(E_i,E_j)E_l, E_k), so that
/// riemann(i,j,i,j) is the sectional curvature of span{E_i,E_j} and
/// Ric_ij = sum_k riemann(k,i,k,j). The curvature operator is
/// R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y].
struct CurvatureAtPoint {
  SVec point;
  SMat frame;  ///< columns E_a in chart components, E^T g(p) E = I
  Tensor riemann;
  Tensor riemann_grad;  ///< riemann_grad(a,i,j,k,l) = (nabla_{E_a} R)(i,j,k,l)
  SMat ricci;
  double scalar = 0.0;
  SVec scalar_grad;
  CurvatureResiduals residuals;
  std::vector<std::string> warnings;

  int dim() const { return riemann.dim(); }

  /// Builds Ricci, scalar curvature, gradients and residuals from raw tensors.
  static CurvatureAtPoint from_tensors(Tensor riemann, Tensor riemann_grad);

  /// g(R(X,Y)W, Z) for frame-component vectors.
  double rm(const SVec& x, const SVec& y, const SVec& z, const SVec& w) const;
  double ric(const SVec& x, const SVec& y) const;
  /// (nabla_V Ric)(X,Y).
  double nabla_ric(const SVec& v, const SVec& x, const SVec& y) const;
};

/// Gram-Schmidt of the coordinate basis against g(p), columns in order.
SMat orthonormal_frame(const MetricModel& metric, const SVec& p);

CurvatureAtPoint curvature_at(const MetricModel& metric, const SVec& p, double tol = -1.0);

/// Curvature residual tolerance used when none is given: 1e-7 analytic, 1e-5 FD.
double default_curvature_tolerance(const MetricModel& metric);

struct GeodesicEnd {
  SVec position;
  SVec velocity;
  SMat jacobian;  ///< d position / d initial velocity (chart components), if requested
  double energy_drift = 0.0;  ///< relative change of g(x', x')
};

int default_geodesic_steps(double speed);

/// Fixed-step RK4 for x'' + Gamma(x', x') = 0 on [0,1], optionally together
/// with its variational equation.
GeodesicEnd integrate_geodesic(const MetricModel& metric, const SVec& p, const SVec& v,
                               int steps, bool with_jacobian);

/// exp_p(v), v in chart components. steps <= 0 selects the default.
SVec exp_map(const MetricModel& metric, const SVec& p, const SVec& v, int steps = 0);

/// Newton inversion of exp_p; returns chart components of the initial velocity.
SVec log_map(const MetricModel& metric, const SVec& p, const SVec& q, int steps = 0);

/// Scalar curvature only (cheaper than curvature_at when gradients are not needed).
double scalar_curvature(const MetricModel& metric, const SVec& p);

/// Newton search for a critical point of the scalar curvature near `guess`.
struct CriticalPoint {
  SVec point;
  SVec gradient;            ///< chart gradient of R at the result
  Eigen::VectorXd hessian_eigenvalues;
  int iterations = 0;
};
CriticalPoint refine_scalar_critical_point(const MetricModel& metric, const SVec& guess,
                                           double tol = 1e-10, int max_iter = 30);

}  // namespace kleaf
