#pragma once

// Numerical checks of the asymptotic expansions and identities behind the
// leaf construction. Every check returns a CheckReport carrying pass/fail,
// the fitted numbers and free-form notes.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kleaf/manifold.hpp"
#include "kleaf/solver.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

/// Least-squares fit of log|value| = log(coefficient) + exponent * log(rho).
struct FitResult {
  double exponent = 0.0;
  double coefficient = 0.0;
  std::vector<std::pair<double, double>> samples;
  double residual = 0.0;  ///< max |log misfit|
  bool identically_zero = false;  ///< every sample below the zero threshold

  bool passes(double min_exponent) const { return identically_zero || exponent >= min_exponent; }
};

/// Needs >= 4 samples with positive abscissae. Values with magnitude below
/// `zero_threshold` count as zero; all-zero input gives identically_zero.
FitResult fit_power_law(const std::vector<double>& rho, const std::vector<double>& value,
                        double zero_threshold = 1e-13);

/// Polynomial least squares y ~ sum_j c_j x^powers[j].
Eigen::VectorXd fit_polynomial(const std::vector<double>& x, const std::vector<double>& y,
                               const std::vector<int>& powers);

struct CheckReport {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> numbers;
  std::vector<FitResult> fits;
  std::vector<std::string> fit_labels;
  std::vector<std::string> notes;

  void set(const std::string& key, double value) { numbers.emplace_back(key, value); }
  double get(const std::string& key) const;
  void add_fit(const std::string& label, FitResult fit) {
    fit_labels.push_back(label);
    fits.push_back(std::move(fit));
  }
};

/// Pulled-back metric in normal coordinates along rays x = t Theta compared
/// with delta + (1/3) R x x + (1/6) nabla R x x x. Passes when the remainder
/// exponent is >= 3.7 (or the remainder vanishes). Also reports the
/// Richardson-extrapolated error of the quadratic coefficient.
CheckReport check_metric_expansion(const MetricModel& metric, const SVec& p, int directions,
                                   const std::vector<double>& radii, std::uint64_t seed);

/// Geodesic spheres (w = 0): rho^k sigma_k - C(n,k) against rho, and the
/// Richardson quadratic coefficient field against -C(n-1,k-1) Ric(T,T)/3.
CheckReport check_sigma_expansion(const MetricModel& metric, const SVec& p, int k, const GridPtr& grid,
                                  const std::vector<double>& radii);

/// Random gradient-of-curvature data obeying the Riemann symmetries and the
/// second Bianchi identity, in dimension `dim`. The curvature itself is a
/// random algebraic curvature tensor.
CurvatureAtPoint random_curvature(int dim, std::uint64_t seed);

/// Degree-one coefficients of T -> (nabla_T Ric)(T,T) by quadrature against the
/// closed form built from the fourth moments. Throws ContractError when the data
/// violates the Bianchi identities beyond 1e-10.
CheckReport check_projection_lemma(const CurvatureAtPoint& curv, const GridPtr& grid);

struct LeafVolumes {
  double boundary = 0.0;  ///< Vol_n of the leaf
  double enclosed = 0.0;  ///< Vol_{n+1} of the region it bounds
};

/// Boundary volume from the first form; enclosed volume by Gauss-Legendre in r
/// composed with the sphere grid, in normal coordinates about the leaf center.
LeafVolumes leaf_volumes(const MetricModel& metric, const LeafGeometry& leaf, const SphereField& w,
                         int radial_nodes = 8);

/// Normalized volume ratios over a sweep and the fitted rho^2 coefficients
/// compared with -R/(2(n+1)) and -(n+2)R/(2n(n+3)) within 5%.
CheckReport check_volume_expansion(const MetricModel& metric, const FoliationReport& report);

struct FoliationCheck {
  bool passed = false;
  double margin = 0.0;
  int offending_leaf = -1;
  SVec offending_direction;
  double center_constant = 0.0;
  std::vector<double> gaps;  ///< min gap per consecutive pair
  std::string message;
};

/// Radial coordinate of each leaf about the finest-leaf center along the
/// directions of an L = 8 grid; strict monotonicity in rho is required.
FoliationCheck check_foliation(const MetricModel& metric, const FoliationReport& report);

/// Fixed-center inner solves over the radii: the kernel part of the even part
/// of the residual must vanish and |V_p| must scale with exponent >= 1.8.
CheckReport check_parity_cancellations(const MetricModel& metric, const SVec& p, const GridPtr& grid,
                                       const SolverConfig& cfg, const std::vector<double>& radii);

/// (1/3)(Ric(T,T) w + c Ric(grad w, T) - R(T, e_a, e_b, T) Hess_ab w). The exact
/// residual map for k = 1 has c = -2.
SphereField linearized_curvature_term(const CurvatureAtPoint& curv, const SphereField& w,
                                      double ric_gradient_coefficient = -2.0);

/// Central difference of the exact residual map at w = 0 in the direction w
/// against (Delta + n) w + rho^2 L w; remainder exponent >= 2.7 or below 1e-7.
/// Also reports the exponent obtained with c = +2 and a least-squares fit of
/// the three curvature coefficients.
CheckReport check_linearized_operator(const MetricModel& metric, const SVec& p, const SphereField& w, int k,
                                      const std::vector<double>& radii);

/// Random center pairs around p0 at distance <= rho: max ||w_p - w_p'|| / (rho^2 dist)
/// per radius. Passes when the constants agree within 50%.
CheckReport check_lipschitz(const MetricModel& metric, const SVec& p0, const GridPtr& grid,
                            const SolverConfig& cfg, const std::vector<double>& radii, int pairs,
                            std::uint64_t seed);

/// Fourth-moment identities of the sphere quadrature.
CheckReport check_sphere_moments(const GridPtr& grid);

}  // namespace kleaf
