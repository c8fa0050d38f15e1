#include "kleaf/graphgeom.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "kleaf/errors.hpp"
#include "kleaf/parallel.hpp"
#include "kleaf/symfunc.hpp"

namespace kleaf {

PerturbedSphere make_perturbed_sphere(const MetricModel& metric, const SVec& center, double rho,
                                      SphereField w) {
  PerturbedSphere ps;
  ps.metric = &metric;
  ps.center = center;
  ps.rho = rho;
  ps.w = std::move(w);
  ps.frame = orthonormal_frame(metric, center);
  return ps;
}

void check_graph_condition(const PerturbedSphere& ps) {
  if (!ps.metric) throw ContractError("perturbed sphere without metric");
  if (!ps.w.grid || !ps.w.is_scalar()) throw ContractError("perturbed sphere: scalar w expected");
  if (ps.w.grid->ambient_dim() != ps.metric->dim())
    throw ContractError("perturbed sphere: grid dimension does not match the metric");
  if (!(ps.rho > 0.0)) throw ContractError("perturbed sphere: rho must be positive");
  const double wmax = ps.w.values.cwiseAbs().maxCoeff();
  if (!(wmax < 0.5)) {
    std::ostringstream os;
    os << "graph condition violated: max|w| = " << wmax << " >= 1/2";
    throw InvariantError(os.str());
  }
  if (ps.rho * (1.0 + wmax) > ps.metric->injectivity_budget())
    throw InvariantError("perturbed sphere exceeds the chart injectivity budget");
}

Embedding embed(const PerturbedSphere& ps) {
  check_graph_condition(ps);
  const SphereGrid& grid = *ps.w.grid;
  const int N = grid.size(), n = grid.n();
  const SMat E = ps.frame.size() ? ps.frame : orthonormal_frame(*ps.metric, ps.center);
  const std::vector<Eigen::MatrixXd> dw = tangential_gradient(ps.w);
  Embedding out;
  out.position.resize(N);
  out.radial.resize(N);
  out.tangents.resize(N);
  std::vector<double> drift(N, 0.0);
  parallel_for(N, [&](int i) {
    const SVec theta = grid.node(i);
    const double w = ps.w.values(i, 0);
    const double r = ps.rho * (1.0 - w);
    const SVec dir = E * theta;
    const GeodesicEnd end = integrate_geodesic(*ps.metric, ps.center, r * dir, 0, true);
    out.position[i] = end.position;
    const SVec ups = end.jacobian * dir;
    out.radial[i] = ups;
    SMat z(n + 1, n);
    for (int j = 0; j < n; ++j) {
      const SVec ups_j = end.jacobian * (E * grid.frame(i).col(j));
      z.col(j) = ps.rho * ((1.0 - w) * ups_j - dw[j](i, 0) * ups);
    }
    out.tangents[i] = z;
    drift[i] = end.energy_drift;
  });
  for (double d : drift) out.max_energy_drift = std::max(out.max_energy_drift, d);
  return out;
}

LeafGeometry leaf_geometry(const PerturbedSphere& ps) {
  LeafGeometry leaf;
  leaf.embedding = embed(ps);
  const Embedding& em = leaf.embedding;
  const GridPtr& grid = ps.w.grid;
  const int N = grid->size(), n = grid->n(), d = n + 1;
  leaf.grid = grid;
  leaf.n = n;
  leaf.rho = ps.rho;
  leaf.center = ps.center;
  leaf.frame = ps.frame.size() ? ps.frame : orthonormal_frame(*ps.metric, ps.center);

  leaf.first_form.resize(N);
  leaf.normal.resize(N);
  std::vector<SMat> gq(N);
  Eigen::MatrixXd normal_components(N, d);
  parallel_for(N, [&](int i) {
    const SMat g = ps.metric->evaluate(em.position[i]);
    gq[i] = g;
    const SMat& z = em.tangents[i];
    const SMat G = z.transpose() * g * z;
    leaf.first_form[i] = G;
    // N~ = -Y + A^j Z_j orthogonal to every Z_i
    const SVec rhs = z.transpose() * g * em.radial[i];
    Eigen::LDLT<SMat> ldlt(G);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
      throw DegenerateLeafError("first fundamental form is singular at node " + std::to_string(i));
    const SVec a = ldlt.solve(rhs);
    SVec nt = -em.radial[i] + z * a;
    nt /= std::sqrt(nt.dot(g * nt));
    leaf.normal[i] = nt;
    normal_components.row(i) = nt.transpose();
  });

  // chart components of N differentiated along the node frames
  const std::vector<Eigen::MatrixXd> dN = tangential_gradient(SphereField(grid, normal_components, {d}));

  leaf.second_form.resize(N);
  leaf.shape.resize(N);
  leaf.principal.resize(N);
  leaf.sigmas.resize(N, n + 1);
  leaf.volume_density.resize(N);
  std::vector<double> asym(N), orth(N), norm(N);
  parallel_for(N, [&](int i) {
    const SMat& z = em.tangents[i];
    const SMat& g = gq[i];
    const SVec& nv = leaf.normal[i];
    const Christoffel gamma = christoffels(*ps.metric, em.position[i]);
    SMat b(n, n);
    for (int a = 0; a < n; ++a) {
      SVec cov(d);
      for (int c = 0; c < d; ++c) {
        double s = dN[a](i, c);
        for (int e = 0; e < d; ++e)
          for (int f = 0; f < d; ++f) s += gamma(c, e, f) * z(e, a) * nv[f];
        cov[c] = s;
      }
      for (int bb = 0; bb < n; ++bb) b(a, bb) = -cov.dot(g * z.col(bb));
    }
    const double scale = b.cwiseAbs().maxCoeff();
    asym[i] = scale > 0.0 ? (b - b.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
    b = 0.5 * (b + b.transpose()).eval();
    leaf.second_form[i] = b;

    const SMat& G = leaf.first_form[i];
    const Eigen::LLT<SMat> llt(G);
    const SMat Linv = llt.matrixL().solve(SMat::Identity(n, n));
    SMat S = Linv * b * Linv.transpose();
    S = 0.5 * (S + S.transpose()).eval();
    leaf.shape[i] = S;
    leaf.principal[i] = Eigen::SelfAdjointEigenSolver<SMat>(S, Eigen::EigenvaluesOnly).eigenvalues();
    const std::vector<double> s = sigmas(SymMatrix(Eigen::MatrixXd(S)));
    for (int k = 0; k <= n; ++k) leaf.sigmas(i, k) = s[k];
    leaf.volume_density[i] = std::sqrt(G.determinant());

    double o = 0.0;
    for (int a = 0; a < n; ++a) o = std::max(o, std::abs(nv.dot(g * z.col(a))) / std::sqrt(G(a, a)));
    orth[i] = o;
    norm[i] = std::abs(nv.dot(g * nv) - 1.0);
  });
  for (int i = 0; i < N; ++i) {
    leaf.asymmetry = std::max(leaf.asymmetry, asym[i]);
    leaf.orthogonality = std::max(leaf.orthogonality, orth[i]);
    leaf.normalization = std::max(leaf.normalization, norm[i]);
  }
  if (leaf.asymmetry > kMaxSecondFormAsymmetry) {
    std::ostringstream os;
    os << "second fundamental form asymmetry " << leaf.asymmetry
       << " exceeds tolerance; the grid under-resolves the leaf";
    throw AccuracyError(os.str());
  }
  return leaf;
}

SphereField LeafGeometry::sigma_field(int k) const {
  if (k < 0 || k > n) throw ContractError("sigma_field: k outside [0, n]");
  return SphereField(grid, sigmas.col(k));
}

}  // namespace kleaf
