#pragma once

// Two-level solve for leaves of constant sigma_k: an inner fixed point for the
// radial perturbation w orthogonal to ker(Delta + n) at a fixed center, and an
// outer Newton iteration on the center that removes the kernel component.

#include <string>
#include <vector>

#include "kleaf/graphgeom.hpp"
#include "kleaf/manifold.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

struct SolverConfig {
  enum class SeedMode { zero, expansion };

  int k = 1;
  double tol_inner = 1e-10;  ///< sup-norm of the projected residual
  double tol_outer = 1e-9;   ///< |V|
  int max_inner = 50;
  int max_outer = 30;
  double damping = 1.0;
  std::vector<double> radii;
  SeedMode seed_mode = SeedMode::expansion;
  bool move_center = true;  ///< false freezes the center (inner solve only)
};

/// Throws ContractError on invalid settings for this metric and sphere dimension.
/// Returns advisory notes (k = n is accepted with a note).
std::vector<std::string> validate(const SolverConfig& cfg, const MetricModel& metric, int n);

/// rho^2 w0 + rho^3 w1 from the curvature at the center.
SphereField seed_w(const CurvatureAtPoint& curv, const GridPtr& grid, double rho);

/// F = (rho^k sigma_k - C(n,k)) / C(n-1,k-1) on the leaf.
SphereField residual_field(const LeafGeometry& leaf, int k);
SphereField residual(const MetricModel& metric, const SVec& center, double rho, const SphereField& w, int k);

struct InnerResult {
  SphereField w;
  LeafGeometry geometry;
  SphereField residual;
  SVec kernel_coefficients;  ///< of the residual
  double projected_residual = 0.0;  ///< sup-norm of the kernel-free part
  int iterations = 0;
  double final_damping = 1.0;
  std::vector<double> history;
  std::vector<double> contraction_ratios;
};

/// Fixed point w <- w - damping * (Delta+n)^{-1} Pi_perp F(w), started from
/// `warm` when given, otherwise from the configured seed.
InnerResult inner_fixed_point(const MetricModel& metric, const SVec& center, double rho,
                              const GridPtr& grid, const SolverConfig& cfg,
                              const SphereField* warm = nullptr);

/// 4 (n+3) rho^{-3} times the kernel coefficients of the converged residual.
SVec kernel_residual(const InnerResult& inner, double rho);
SVec kernel_residual(const MetricModel& metric, const SVec& center, double rho, const GridPtr& grid,
                     const SolverConfig& cfg);

struct Leaf {
  double rho = 0.0;
  SVec center;
  InnerResult inner;
  SVec kernel_residual;
  double hk_mean = 0.0;    ///< node average of sigma_k
  double hk_spread = 0.0;  ///< max relative deviation of sigma_k from C(n,k) rho^{-k}
  double min_newton_eigenvalue = 0.0;
  int outer_iterations = 0;
  int inner_solves = 0;
  std::vector<double> outer_history;  ///< |V| per accepted outer iterate
  bool outer_at_noise_floor = false;
  double noise_floor = 0.0;
  std::vector<std::string> notes;

  const SphereField& w() const { return inner.w; }
  const LeafGeometry& geometry() const { return inner.geometry; }
};

/// Outer solve for the center starting at `center_guess`.
Leaf solve_leaf(const MetricModel& metric, const SVec& center_guess, double rho, const GridPtr& grid,
                const SolverConfig& cfg, const SphereField* warm = nullptr);

/// Center only (see solve_leaf).
SVec outer_solve_center(const MetricModel& metric, const SVec& center_guess, double rho,
                        const GridPtr& grid, const SolverConfig& cfg);

struct FoliationReport {
  std::vector<Leaf> leaves;  ///< in the order of cfg.radii (decreasing rho)
  SVec base_point;
  std::vector<double> drift;  ///< |p_rho - p_0| in the chart
  double nesting_margin = 0.0;
  std::vector<double> nesting_gaps;  ///< min radial gap per consecutive pair
  bool nested = false;
  double center_speed_constant = 0.0;  ///< max |dp| / (d rho * rho)
  std::vector<std::string> notes;
};

/// Warm-started sweep over cfg.radii followed by the nesting check.
FoliationReport foliate(const MetricModel& metric, const SVec& p0, const GridPtr& grid, const SolverConfig& cfg);

}  // namespace kleaf
