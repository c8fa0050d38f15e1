#pragma once

// Product quadrature grids on S^2 and S^3, real spherical harmonics up to the
// band limit, and the spectral operators built from them.

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kleaf/jet.hpp"
#include "kleaf/linalg.hpp"

namespace kleaf {

class SphereGrid;

/// Orthonormal real harmonics on S^n up to degree L, built from Cartesian
/// solid harmonics (homogeneous Gegenbauer factors times lower-dimensional
/// harmonics). Node tables are computed lazily and cached.
class HarmonicBasis {
 public:
  HarmonicBasis(const SphereGrid& grid);

  int size() const { return static_cast<int>(degrees_.size()); }
  int degree(int m) const { return degrees_[m]; }
  const std::vector<int>& degrees() const { return degrees_; }

  /// N x M table of basis values at the grid nodes.
  const Eigen::MatrixXd& values() const;
  /// N x M tables of frame components of the tangential gradient.
  const std::vector<Eigen::MatrixXd>& gradients() const;
  /// N x M tables of the covariant Hessian, index a * n + b.
  const std::vector<Eigen::MatrixXd>& hessians() const;

  /// Basis values at an arbitrary unit vector.
  Eigen::VectorXd evaluate(const SVec& theta) const;

 private:
  // Unnormalized homogeneous polynomials of all basis functions as jets at x.
  std::vector<Jet> solid(const SVec& x, int order) const;
  void build_tables(int order) const;

  const SphereGrid& grid_;
  std::vector<int> degrees_;
  std::vector<int> order_;  // degree-sorted position -> index in recursion order
  std::vector<double> norms_;

  mutable std::mutex mutex_;
  mutable int built_order_ = -1;
  mutable Eigen::MatrixXd values_;
  mutable std::vector<Eigen::MatrixXd> gradients_;
  mutable std::vector<Eigen::MatrixXd> hessians_;
};

/// Gauss-Legendre nodes on [-1,1] in increasing order with their weights.
void gauss_legendre(int count, Eigen::VectorXd& x, Eigen::VectorXd& w);

class SphereGrid {
 public:
  /// n = 2: Gauss-Legendre colatitudes x equispaced longitudes.
  /// n = 3: Gauss-Chebyshev (second kind) in cos of the first angle x the S^2 grid.
  /// Integrates every polynomial of degree <= 2L+1 exactly.
  static std::shared_ptr<const SphereGrid> build(int n, int band_limit);

  int n() const { return n_; }
  int ambient_dim() const { return n_ + 1; }
  int band_limit() const { return band_limit_; }
  int size() const { return static_cast<int>(weights_.size()); }

  /// Unit vector of node i (ambient components).
  SVec node(int i) const { return nodes_.row(i).transpose(); }
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// (n+1) x n matrix whose columns are an orthonormal tangent frame at node i.
  const SMat& frame(int i) const { return frames_[i]; }
  int antipode(int i) const { return antipodes_[i]; }

  double volume() const;

  const HarmonicBasis& basis() const;

  /// Same nodes and weights, each tangent frame rotated by a random orthogonal matrix.
  std::shared_ptr<const SphereGrid> with_rotated_frames(std::uint64_t seed) const;

 private:
  SphereGrid() = default;

  int n_ = 0;
  int band_limit_ = 0;
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd weights_;
  std::vector<SMat> frames_;
  std::vector<int> antipodes_;
  mutable std::once_flag basis_once_;
  mutable std::unique_ptr<HarmonicBasis> basis_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

/// Values at grid nodes. Each row holds the components of one node, laid out
/// row-major according to `shape` (empty shape means scalar).
struct SphereField {
  GridPtr grid;
  Eigen::MatrixXd values;
  std::vector<int> shape;
  std::optional<Eigen::MatrixXd> coefficients;  ///< M x channels
  std::vector<std::string> warnings;

  SphereField() = default;
  SphereField(GridPtr g, Eigen::MatrixXd v, std::vector<int> s = {});

  int channels() const { return static_cast<int>(values.cols()); }
  bool is_scalar() const { return shape.empty(); }
  Eigen::VectorXd scalar() const;

  template <class F>
  static SphereField from_function(GridPtr grid, F&& f) {
    Eigen::MatrixXd v(grid->size(), 1);
    for (int i = 0; i < grid->size(); ++i) v(i, 0) = f(grid->node(i));
    return SphereField(grid, std::move(v));
  }
  static SphereField from_coefficients(GridPtr grid, const Eigen::MatrixXd& coeffs,
                                       std::vector<int> shape = {});
  static SphereField constant(GridPtr grid, double c);
};

SphereField operator+(const SphereField& a, const SphereField& b);
SphereField operator-(const SphereField& a, const SphereField& b);
SphereField operator*(double s, const SphereField& a);

/// Quadrature of a scalar field.
double quad(const SphereField& field);
/// Quadrature of every channel.
Eigen::VectorXd quad_channels(const SphereField& field);

/// Harmonic coefficients (M x channels) by quadrature.
Eigen::MatrixXd analysis(const SphereField& field);
/// Field with coefficients attached; flags aliasing when energy sits above degree L-2.
SphereField with_coefficients(const SphereField& field);

struct KernelSplit {
  SVec coefficients;  ///< c_i = int f x_i / int x_i^2
  SphereField perp;
};
KernelSplit project_kernel(const SphereField& field);

SphereField laplace_beltrami(const SphereField& field);

/// Unique w with (Delta + n) w = f and no degree-one component.
SphereField solve_helmholtz(const SphereField& field, double kernel_tol = 1e-9);

/// Per direction a of the node frames: N x channels matrix of E_a(f).
std::vector<Eigen::MatrixXd> tangential_gradient(const SphereField& field);

struct TangentialDerivatives {
  SphereField gradient;  ///< shape {n}
  SphereField hessian;   ///< shape {n, n}
};
TangentialDerivatives tangential_derivatives(const SphereField& field);

/// Spectral interpolation of a scalar field at an arbitrary unit vector.
double interpolate(const SphereField& field, const SVec& theta);

/// CSV with columns index, theta_0.., weight, value_0..
void write_csv(std::ostream& os, const SphereField& field);

/// Relative energy above degree L-2 at which the aliasing warning fires.
inline constexpr double kAliasingThreshold = 1e-6;

}  // namespace kleaf
