#pragma once

// Elementary symmetric functions of symmetric matrices and Newton transforms,
// from the trace recursion T_0 = I, s_k = tr(A T_{k-1}) / k, T_k = s_k I - A T_{k-1}.

#include <Eigen/Core>
#include <vector>

namespace kleaf {

/// Symmetric matrix; the input is symmetrized on construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& a);
  static SymMatrix identity(int n);

  int order() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

double binomial(int n, int k);

/// sigma_0 .. sigma_n of the eigenvalues.
std::vector<double> sigmas(const SymMatrix& a);
double sigma_k(const SymMatrix& a, int k);

/// T_k(A) = sigma_k I - sigma_{k-1} A + ... + (-1)^k A^k.
SymMatrix newton_transform(const SymMatrix& a, int k);

/// d/dt sigma_k(A + t Adot) at t = 0, i.e. tr(T_{k-1}(A) Adot).
double sigma_derivative(const SymMatrix& a, const SymMatrix& adot, int k);

/// Smallest eigenvalue of T_{k-1}(A); positive inside the ellipticity cone.
double newton_min_eigenvalue(const SymMatrix& a, int k);

}  // namespace kleaf
