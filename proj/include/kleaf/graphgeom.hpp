#pragma once

// Exact geometry of the radial graph S = { exp_p(rho (1 - w(T)) E T) : T in S^n }
// over a geodesic sphere: first and second fundamental forms, unit normal,
// principal curvatures and sigma_k at every grid node.

#include <vector>

#include "kleaf/linalg.hpp"
#include "kleaf/manifold.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

struct PerturbedSphere {
  const MetricModel* metric = nullptr;
  SVec center;
  double rho = 0.0;
  SphereField w;
  /// g-orthonormal frame at the center (columns); empty selects orthonormal_frame().
  SMat frame;
};

PerturbedSphere make_perturbed_sphere(const MetricModel& metric, const SVec& center, double rho,
                                      SphereField w);

/// Positions and tangent vectors of the graph. Node vectors are chart components.
struct Embedding {
  std::vector<SVec> position;  ///< q
  std::vector<SVec> radial;    ///< push-forward of the radial direction at q
  std::vector<SMat> tangents;  ///< (n+1) x n, columns Z_j
  double max_energy_drift = 0.0;
};

/// Invariants: max|w| < 1/2 and rho (1 + max|w|) inside the chart budget.
void check_graph_condition(const PerturbedSphere& ps);

Embedding embed(const PerturbedSphere& ps);

struct LeafGeometry {
  GridPtr grid;
  int n = 0;
  double rho = 0.0;
  SVec center;
  SMat frame;
  Embedding embedding;
  std::vector<SMat> first_form;
  std::vector<SVec> normal;
  std::vector<SMat> second_form;  ///< symmetrized
  std::vector<SMat> shape;        ///< L^{-1} b L^{-T} with first form L L^T
  std::vector<SVec> principal;    ///< ascending
  Eigen::MatrixXd sigmas;         ///< N x (n+1), column k holds sigma_k
  Eigen::VectorXd volume_density; ///< sqrt det of the first form

  double asymmetry = 0.0;       ///< max |b - b^T| relative to |b|
  double orthogonality = 0.0;   ///< max |g(N, Z_i)| / |Z_i|
  double normalization = 0.0;   ///< max |g(N, N) - 1|

  SphereField sigma_field(int k) const;
};

/// Asymmetry of b above this raises AccuracyError.
inline constexpr double kMaxSecondFormAsymmetry = 1e-6;

LeafGeometry leaf_geometry(const PerturbedSphere& ps);

}  // namespace kleaf
