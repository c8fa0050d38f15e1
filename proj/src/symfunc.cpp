#include "kleaf/symfunc.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "kleaf/errors.hpp"

namespace kleaf {

namespace {

void check_k(const SymMatrix& a, int k) {
  if (k < 0 || k > a.order())
    throw ContractError("symmetric function order " + std::to_string(k) + " outside [0, " +
                        std::to_string(a.order()) + "]");
}

// Runs the recursion up to k, returning sigma_0..sigma_k and T_k.
Eigen::MatrixXd recurse(const Eigen::MatrixXd& a, int k, std::vector<double>* sig) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n, n);
  if (sig) sig->assign(1, 1.0);
  for (int j = 1; j <= k; ++j) {
    const Eigen::MatrixXd at = a * t;
    const double s = at.trace() / j;
    if (sig) sig->push_back(s);
    t = -at;
    t.diagonal().array() += s;
  }
  return t;
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ContractError("SymMatrix: square matrix expected");
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> sigmas(const SymMatrix& a) {
  std::vector<double> s;
  recurse(a.matrix(), a.order(), &s);
  return s;
}

double sigma_k(const SymMatrix& a, int k) {
  check_k(a, k);
  std::vector<double> s;
  recurse(a.matrix(), k, &s);
  return s[k];
}

SymMatrix newton_transform(const SymMatrix& a, int k) {
  check_k(a, k);
  return SymMatrix(recurse(a.matrix(), k, nullptr));
}

double sigma_derivative(const SymMatrix& a, const SymMatrix& adot, int k) {
  check_k(a, k);
  if (adot.order() != a.order()) throw ContractError("sigma_derivative: order mismatch");
  if (k == 0) return 0.0;
  return (recurse(a.matrix(), k - 1, nullptr) * adot.matrix()).trace();
}

double newton_min_eigenvalue(const SymMatrix& a, int k) {
  check_k(a, k);
  if (k == 0) return 1.0;
  const Eigen::MatrixXd t = newton_transform(a, k - 1).matrix();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

}  // namespace kleaf
