#include <algorithm>
#include <cmath>
#include <numeric>

#include "kleaf/errors.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

namespace {

struct Solid {
  int degree;
  Jet value;
};

// All harmonic homogeneous polynomials of degree <= L in the variables
// x[s..d-1], one per element of an orthogonal basis.
std::vector<Solid> solid_harmonics(const std::array<Jet, kMaxJetDim>& x, int s, int d, int L) {
  std::vector<Solid> out;
  const int dim = x[0].dim, order = x[0].order;
  if (d - s == 2) {
    out.push_back({0, Jet::constant(dim, order, 1.0)});
    Jet re = Jet::constant(dim, order, 1.0), im = Jet::constant(dim, order, 0.0);
    for (int m = 1; m <= L; ++m) {
      const Jet nre = re * x[s] - im * x[s + 1];
      const Jet nim = re * x[s + 1] + im * x[s];
      re = nre;
      im = nim;
      out.push_back({m, re});
      out.push_back({m, im});
    }
    return out;
  }
  const std::vector<Solid> inner = solid_harmonics(x, s + 1, d, L);
  Jet r2 = Jet::constant(dim, order, 0.0);
  for (int t = s; t < d; ++t) r2 = r2 + x[t] * x[t];
  for (const Solid& h : inner) {
    // homogenized Gegenbauer C^alpha_k(x_s / r) r^k
    const double alpha = h.degree + 0.5 * (d - s - 2);
    Jet g0 = Jet::constant(dim, order, 1.0);
    Jet g1 = (2.0 * alpha) * x[s];
    out.push_back({h.degree, h.value});
    if (h.degree + 1 <= L) out.push_back({h.degree + 1, g1 * h.value});
    for (int k = 2; h.degree + k <= L; ++k) {
      const Jet g2 = ((2.0 * (k + alpha - 1.0)) * (x[s] * g1) - (k + 2.0 * alpha - 2.0) * (r2 * g0)) / k;
      out.push_back({h.degree + k, g2 * h.value});
      g0 = g1;
      g1 = g2;
    }
  }
  return out;
}

}  // namespace

std::vector<Jet> HarmonicBasis::solid(const SVec& x, int order) const {
  const int d = grid_.ambient_dim();
  std::array<Jet, kMaxJetDim> vars;
  for (int i = 0; i < d; ++i) vars[i] = Jet::variable(d, order, x[i], i);
  std::vector<Solid> all = solid_harmonics(vars, 0, d, grid_.band_limit());
  std::vector<Jet> out;
  out.reserve(all.size());
  for (int k : order_) out.push_back(all[k].value);
  return out;
}

HarmonicBasis::HarmonicBasis(const SphereGrid& grid) : grid_(grid) {
  const int d = grid.ambient_dim();
  std::array<Jet, kMaxJetDim> vars;
  for (int i = 0; i < d; ++i) vars[i] = Jet::constant(d, 0, 1.0);
  const std::vector<Solid> all = solid_harmonics(vars, 0, d, grid.band_limit());
  order_.resize(all.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](int a, int b) { return all[a].degree < all[b].degree; });
  for (int k : order_) degrees_.push_back(all[k].degree);
  norms_.assign(degrees_.size(), 1.0);
  build_tables(0);
  const Eigen::VectorXd sq = values_.cwiseAbs2().transpose() * grid.weights();
  for (int m = 0; m < size(); ++m) {
    norms_[m] = 1.0 / std::sqrt(sq[m]);
    values_.col(m) *= norms_[m];
  }
}

void HarmonicBasis::build_tables(int order) const {
  const int N = grid_.size(), M = size(), n = grid_.n();
  Eigen::MatrixXd vals(N, M);
  std::vector<Eigen::MatrixXd> grads, hess;
  if (order >= 1) grads.assign(n, Eigen::MatrixXd(N, M));
  if (order >= 2) hess.assign(n * n, Eigen::MatrixXd(N, M));
  for (int i = 0; i < N; ++i) {
    const std::vector<Jet> f = solid(grid_.node(i), order);
    const SMat& T = grid_.frame(i);
    for (int m = 0; m < M; ++m) {
      const double c = norms_[m];
      vals(i, m) = c * f[m].v;
      if (order >= 1) {
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int e = 0; e < n + 1; ++e) s += T(e, a) * f[m].d[e];
          grads[a](i, m) = c * s;
        }
      }
      if (order >= 2) {
        for (int a = 0; a < n; ++a)
          for (int b = a; b < n; ++b) {
            double s = 0.0;
            for (int e = 0; e < n + 1; ++e)
              for (int g = 0; g < n + 1; ++g) s += T(e, a) * T(g, b) * f[m].hess(e, g);
            if (a == b) s -= degrees_[m] * f[m].v;
            hess[a * n + b](i, m) = hess[b * n + a](i, m) = c * s;
          }
      }
    }
  }
  if (built_order_ < 0) values_ = std::move(vals);
  if (order >= 1 && built_order_ < 1) gradients_ = std::move(grads);
  if (order >= 2) hessians_ = std::move(hess);
  built_order_ = order;
}

const Eigen::MatrixXd& HarmonicBasis::values() const { return values_; }

const std::vector<Eigen::MatrixXd>& HarmonicBasis::gradients() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (built_order_ < 1) build_tables(1);
  return gradients_;
}

const std::vector<Eigen::MatrixXd>& HarmonicBasis::hessians() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (built_order_ < 2) build_tables(2);
  return hessians_;
}

Eigen::VectorXd HarmonicBasis::evaluate(const SVec& theta) const {
  if (theta.size() != grid_.ambient_dim()) throw ContractError("harmonic evaluation: dimension mismatch");
  const std::vector<Jet> f = solid(theta, 0);
  Eigen::VectorXd out(size());
  for (int m = 0; m < size(); ++m) out[m] = norms_[m] * f[m].v;
  return out;
}

}  // namespace kleaf
