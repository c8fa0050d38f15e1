#include <cmath>
#include <random>

#include <Eigen/QR>

#include "kleaf/errors.hpp"
#include "kleaf/sphere.hpp"

namespace kleaf {

// Newton on P_N.
void gauss_legendre(int count, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(count);
  w.resize(count);
  for (int i = 0; i < count; ++i) {
    double t = -std::cos(M_PI * (i + 0.75) / (count + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  // enforce exact antisymmetry so the grid is antipodally closed to the last bit
  for (int i = 0; i < count / 2; ++i) {
    const double a = 0.5 * (x[count - 1 - i] - x[i]);
    const double b = 0.5 * (w[i] + w[count - 1 - i]);
    x[i] = -a;
    x[count - 1 - i] = a;
    w[i] = w[count - 1 - i] = b;
  }
  if (count % 2 == 1) x[count / 2] = 0.0;
}

namespace {

// Nodes and weights for int f(t) sqrt(1-t^2) dt, increasing t.
void gauss_chebyshev_second(int count, Eigen::VectorXd& x, Eigen::VectorXd& w) {
  x.resize(count);
  w.resize(count);
  for (int i = 0; i < count; ++i) {
    const double a = M_PI * (count - i) / (count + 1.0);
    x[i] = std::cos(a);
    w[i] = M_PI / (count + 1.0) * std::sin(a) * std::sin(a);
  }
  for (int i = 0; i < count / 2; ++i) {
    const double a = 0.5 * (x[count - 1 - i] - x[i]);
    x[i] = -a;
    x[count - 1 - i] = a;
    w[i] = w[count - 1 - i] = 0.5 * (w[i] + w[count - 1 - i]);
  }
  if (count % 2 == 1) x[count / 2] = 0.0;
}

struct S2Grid {
  std::vector<Eigen::Vector3d> nodes;
  std::vector<Eigen::Matrix<double, 3, 2>> frames;
  std::vector<double> weights;
  std::vector<int> antipodes;
};

S2Grid build_s2(int band_limit) {
  const int nt = band_limit + 1;
  const int np = 2 * band_limit + 2;
  Eigen::VectorXd t, wt;
  gauss_legendre(nt, t, wt);
  S2Grid g;
  for (int i = 0; i < nt; ++i) {
    const double ct = t[i];
    const double st = std::sqrt(1.0 - ct * ct);
    for (int j = 0; j < np; ++j) {
      const double phi = 2.0 * M_PI * j / np;
      const double cp = std::cos(phi), sp = std::sin(phi);
      g.nodes.emplace_back(ct, st * cp, st * sp);
      Eigen::Matrix<double, 3, 2> f;
      f.col(0) << -st, ct * cp, ct * sp;
      f.col(1) << 0.0, -sp, cp;
      g.frames.push_back(f);
      g.weights.push_back(wt[i] * 2.0 * M_PI / np);
      g.antipodes.push_back((nt - 1 - i) * np + (j + np / 2) % np);
    }
  }
  // longitude pi lands exactly on -cos/-sin only up to rounding; snap antipodes
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const std::size_t a = static_cast<std::size_t>(g.antipodes[k]);
    if (k < a) g.nodes[a] = -g.nodes[k];
  }
  return g;
}

}  // namespace

std::shared_ptr<const SphereGrid> SphereGrid::build(int n, int band_limit) {
  if (n != 2 && n != 3) throw CapabilityError("sphere grids exist for n = 2 and n = 3 only");
  if (band_limit < 8) throw ContractError("band limit must be at least 8");
  std::shared_ptr<SphereGrid> grid(new SphereGrid());
  grid->n_ = n;
  grid->band_limit_ = band_limit;
  const S2Grid s2 = build_s2(band_limit);
  const int m2 = static_cast<int>(s2.nodes.size());
  if (n == 2) {
    grid->nodes_.resize(m2, 3);
    grid->weights_.resize(m2);
    for (int i = 0; i < m2; ++i) {
      grid->nodes_.row(i) = s2.nodes[i].transpose();
      grid->weights_[i] = s2.weights[i];
      grid->frames_.push_back(s2.frames[i]);
    }
    grid->antipodes_ = s2.antipodes;
    return grid;
  }
  const int nc = band_limit + 1;
  Eigen::VectorXd t, wt;
  gauss_chebyshev_second(nc, t, wt);
  const int total = nc * m2;
  grid->nodes_.resize(total, 4);
  grid->weights_.resize(total);
  grid->frames_.reserve(total);
  grid->antipodes_.resize(total);
  for (int a = 0; a < nc; ++a) {
    const double cc = t[a];
    const double sc = std::sqrt(1.0 - cc * cc);
    for (int k = 0; k < m2; ++k) {
      const int idx = a * m2 + k;
      const Eigen::Vector3d& om = s2.nodes[k];
      grid->nodes_.row(idx) << cc, sc * om[0], sc * om[1], sc * om[2];
      grid->weights_[idx] = wt[a] * s2.weights[k];
      SMat f = SMat::Zero(4, 3);
      f(0, 0) = -sc;
      f.block(1, 0, 3, 1) = cc * om;
      f.block(1, 1, 3, 2) = s2.frames[k];
      grid->frames_.push_back(f);
      grid->antipodes_[idx] = (nc - 1 - a) * m2 + s2.antipodes[k];
    }
  }
  return grid;
}

double SphereGrid::volume() const { return n_ == 2 ? 4.0 * M_PI : 2.0 * M_PI * M_PI; }

const HarmonicBasis& SphereGrid::basis() const {
  std::call_once(basis_once_, [this] { basis_ = std::make_unique<HarmonicBasis>(*this); });
  return *basis_;
}

std::shared_ptr<const SphereGrid> SphereGrid::with_rotated_frames(std::uint64_t seed) const {
  std::shared_ptr<SphereGrid> grid(new SphereGrid());
  grid->n_ = n_;
  grid->band_limit_ = band_limit_;
  grid->nodes_ = nodes_;
  grid->weights_ = weights_;
  grid->antipodes_ = antipodes_;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (const SMat& f : frames_) {
    Eigen::MatrixXd r(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r(i, j) = normal(rng);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
    grid->frames_.push_back(f * q);
  }
  return grid;
}

}  // namespace kleaf
