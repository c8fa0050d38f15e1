#include "kleaf/solver.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "kleaf/errors.hpp"
#include "kleaf/symfunc.hpp"
#include "kleaf/verify.hpp"

namespace kleaf {

std::vector<std::string> validate(const SolverConfig& cfg, const MetricModel& metric, int n) {
  std::vector<std::string> notes;
  if (metric.dim() != n + 1) throw ContractError("solver: sphere dimension must be ambient dimension - 1");
  if (cfg.k < 1 || cfg.k > n)
    throw ContractError("solver: k must satisfy 1 <= k <= n (k = " + std::to_string(cfg.k) + ", n = " +
                        std::to_string(n) + ")");
  if (cfg.k == n) notes.push_back("k = n accepted; leaves are of constant Gauss-Kronecker curvature");
  if (!(cfg.tol_inner > 0.0) || !(cfg.tol_outer > 0.0)) throw ContractError("solver: tolerances must be positive");
  if (cfg.max_inner < 1 || cfg.max_outer < 0) throw ContractError("solver: iteration limits must be positive");
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) throw ContractError("solver: damping must lie in (0, 1]");
  for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
    if (!(cfg.radii[i] > 0.0)) throw ContractError("solver: radii must be positive");
    if (i > 0 && !(cfg.radii[i] < cfg.radii[i - 1])) throw ContractError("solver: radii must be decreasing");
    if (1.5 * cfg.radii[i] > metric.injectivity_budget())
      throw ContractError("solver: radius exceeds the chart injectivity budget");
  }
  return notes;
}

SphereField seed_w(const CurvatureAtPoint& curv, const GridPtr& grid, double rho) {
  if (curv.dim() != grid->ambient_dim()) throw ContractError("seed_w: curvature and grid dimensions differ");
  const int N = grid->size();
  Eigen::VectorXd ric(N), dric(N);
  for (int i = 0; i < N; ++i) {
    const SVec t = grid->node(i);
    ric[i] = curv.ric(t, t) / 3.0;
    dric[i] = 0.25 * curv.nabla_ric(t, t, t);
  }
  const SphereField w0 = solve_helmholtz(SphereField(grid, ric));
  const SphereField w1 = solve_helmholtz(project_kernel(SphereField(grid, dric)).perp);
  return rho * rho * w0 + rho * rho * rho * w1;
}

SphereField residual_field(const LeafGeometry& leaf, int k) {
  const int n = leaf.n;
  const double c = binomial(n, k), d = binomial(n - 1, k - 1);
  const double scale = std::pow(leaf.rho, k);
  Eigen::VectorXd f(leaf.grid->size());
  for (int i = 0; i < f.size(); ++i) f[i] = (scale * leaf.sigmas(i, k) - c) / d;
  return SphereField(leaf.grid, f);
}

SphereField residual(const MetricModel& metric, const SVec& center, double rho, const SphereField& w, int k) {
  return residual_field(leaf_geometry(make_perturbed_sphere(metric, center, rho, w)), k);
}

namespace {

struct Evaluation {
  LeafGeometry geometry;
  SphereField residual;
  KernelSplit split;
  double norm = 0.0;
};

Evaluation evaluate(const MetricModel& metric, const SVec& center, double rho, const SphereField& w, int k,
                    const SMat& frame) {
  PerturbedSphere ps = make_perturbed_sphere(metric, center, rho, w);
  ps.frame = frame;
  Evaluation e;
  e.geometry = leaf_geometry(ps);
  e.residual = residual_field(e.geometry, k);
  e.split = project_kernel(e.residual);
  e.norm = e.split.perp.values.cwiseAbs().maxCoeff();
  return e;
}

// Strips the degree-one part so that the iterate stays in the complement of the kernel.
SphereField without_kernel(const SphereField& w) {
  SphereField f = with_coefficients(w);
  const HarmonicBasis& b = w.grid->basis();
  Eigen::MatrixXd c = *f.coefficients;
  for (int m = 0; m < b.size(); ++m)
    if (b.degree(m) == 1) c.row(m).setZero();
  return SphereField::from_coefficients(w.grid, c);
}

}  // namespace

InnerResult inner_fixed_point(const MetricModel& metric, const SVec& center, double rho, const GridPtr& grid,
                              const SolverConfig& cfg, const SphereField* warm) {
  const SMat frame = orthonormal_frame(metric, center);
  SphereField w;
  if (warm) {
    if (warm->grid != grid) throw ContractError("inner solve: warm start lives on another grid");
    w = without_kernel(*warm);
  } else if (cfg.seed_mode == SolverConfig::SeedMode::expansion) {
    w = seed_w(curvature_at(metric, center), grid, rho);
  } else {
    w = SphereField::constant(grid, 0.0);
  }
  InnerResult out;
  Evaluation cur;
  try {
    cur = evaluate(metric, center, rho, w, cfg.k, frame);
  } catch (const InvariantError&) {
    // a seed outside the graph regime is replaced by the round sphere
    w = SphereField::constant(grid, 0.0);
    cur = evaluate(metric, center, rho, w, cfg.k, frame);
  }
  out.history.push_back(cur.norm);
  double damping = cfg.damping;
  int polish = 0;
  while (true) {
    // a start that already meets the tolerance is accepted as is
    if (cur.norm < cfg.tol_inner && (polish >= 2 || out.history.size() == 1)) break;
    if (static_cast<int>(out.history.size()) > cfg.max_inner) {
      if (cur.norm < cfg.tol_inner) break;
      std::ostringstream os;
      os << "inner fixed point did not converge in " << cfg.max_inner << " iterations (residual " << cur.norm
         << ")";
      throw ConvergenceError(os.str(), out.history);
    }
    const SphereField delta = solve_helmholtz(cur.split.perp, 1e-6);
    bool accepted = false;
    Evaluation next;
    SphereField w_next;
    double step = damping;
    while (!accepted) {
      w_next = w - step * delta;
      try {
        next = evaluate(metric, center, rho, w_next, cfg.k, frame);
        accepted = next.norm < cur.norm;
      } catch (const InvariantError&) {
        accepted = false;
      } catch (const AccuracyError&) {
        accepted = false;
      }
      if (accepted) break;
      if (cur.norm < cfg.tol_inner) break;  // already converged; the floor is reached
      step *= 0.5;
      if (step < 1.0 / 16.0) {
        std::ostringstream os;
        os << "inner fixed point stalled at residual " << cur.norm << " with damping below 1/16";
        throw ConvergenceError(os.str(), out.history);
      }
    }
    if (!accepted) break;
    damping = step;
    out.contraction_ratios.push_back(next.norm / cur.norm);
    w = w_next;
    cur = std::move(next);
    out.history.push_back(cur.norm);
    if (cur.norm < cfg.tol_inner) {
      // keep going while the iteration still contracts quickly
      if (out.contraction_ratios.back() > 0.5) break;
      ++polish;
    }
  }
  out.w = w;
  out.geometry = std::move(cur.geometry);
  out.residual = std::move(cur.residual);
  out.kernel_coefficients = cur.split.coefficients;
  out.projected_residual = cur.norm;
  out.iterations = static_cast<int>(out.history.size());
  out.final_damping = damping;
  return out;
}

SVec kernel_residual(const InnerResult& inner, double rho) {
  const int n = inner.geometry.n;
  return (4.0 * (n + 3) / (rho * rho * rho)) * inner.kernel_coefficients;
}

SVec kernel_residual(const MetricModel& metric, const SVec& center, double rho, const GridPtr& grid,
                     const SolverConfig& cfg) {
  return kernel_residual(inner_fixed_point(metric, center, rho, grid, cfg), rho);
}

namespace {

void finish_leaf(Leaf& leaf, int k) {
  const LeafGeometry& g = leaf.inner.geometry;
  const double target = binomial(g.n, k) * std::pow(leaf.rho, -k);
  leaf.hk_mean = g.sigmas.col(k).mean();
  leaf.hk_spread = (g.sigmas.col(k).array() - target).abs().maxCoeff() / target;
  double emin = std::numeric_limits<double>::infinity();
  for (const SMat& s : g.shape)
    emin = std::min(emin, newton_min_eigenvalue(SymMatrix(Eigen::MatrixXd(s)), k));
  leaf.min_newton_eigenvalue = emin;
  if (emin <= 0.0) leaf.notes.push_back("leaf leaves the ellipticity cone of sigma_k somewhere");
}

struct OuterState {
  SVec p;
  InnerResult inner;
  SVec v;
};

}  // namespace

Leaf solve_leaf(const MetricModel& metric, const SVec& center_guess, double rho, const GridPtr& grid,
                const SolverConfig& cfg, const SphereField* warm) {
  Leaf leaf;
  leaf.rho = rho;
  leaf.notes = validate(cfg, metric, grid->n());
  const int m = metric.dim();

  OuterState cur{center_guess, inner_fixed_point(metric, center_guess, rho, grid, cfg, warm), SVec()};
  cur.v = kernel_residual(cur.inner, rho);
  leaf.inner_solves = 1;
  leaf.outer_history.push_back(cur.v.norm());

  auto solve_at = [&](const SVec& p, const SphereField& start) {
    OuterState s{p, inner_fixed_point(metric, p, rho, grid, cfg, &start), SVec()};
    s.v = kernel_residual(s.inner, rho);
    ++leaf.inner_solves;
    return s;
  };

  if (cfg.move_center && cur.v.norm() >= cfg.tol_outer) {
    const double h = 1e-3 * rho * rho;
    const double radius = 2.0 * rho * rho;
    auto jacobian = [&](const OuterState& s) {
      SMat jac(m, m);
      for (int c = 0; c < m; ++c) {
        SVec dp = SVec::Zero(m);
        dp[c] = h;
        const SVec vp = solve_at(s.p + dp, s.inner.w).v;
        const SVec vm = solve_at(s.p - dp, s.inner.w).v;
        jac.col(c) = (vp - vm) / (2.0 * h);
      }
      return jac;
    };
    SMat jac = jacobian(cur);
    bool fresh = true;
    int stalls = 0;
    for (int it = 0; it < cfg.max_outer && cur.v.norm() >= cfg.tol_outer; ++it) {
      SVec dp = -jac.fullPivLu().solve(cur.v);
      if (dp.norm() > radius) dp *= radius / dp.norm();
      // stay inside the ball of radius 2 rho^2 around the guess
      const SVec off = cur.p + dp - center_guess;
      if (off.norm() > radius) dp = center_guess + off * (radius / off.norm()) - cur.p;
      bool accepted = false;
      for (double t = 1.0; t >= 1.0 / 8.0; t *= 0.5) {
        OuterState trial = solve_at(cur.p + t * dp, cur.inner.w);
        if (trial.v.norm() < cur.v.norm()) {
          const SVec s = trial.p - cur.p, y = trial.v - cur.v;
          jac += ((y - jac * s) * s.transpose()) / s.squaredNorm();
          fresh = false;
          cur = std::move(trial);
          accepted = true;
          break;
        }
      }
      ++leaf.outer_iterations;
      if (accepted) {
        leaf.outer_history.push_back(cur.v.norm());
        stalls = 0;
        continue;
      }
      if (!fresh) {
        jac = jacobian(cur);
        fresh = true;
        continue;
      }
      if (++stalls >= 2) break;
    }
    if (cur.v.norm() >= cfg.tol_outer) {
      // Newton can no longer reduce |V|: compare with the reproducibility of V itself
      const InnerResult cold = inner_fixed_point(metric, cur.p, rho, grid, cfg);
      ++leaf.inner_solves;
      // rounding in the kernel projection is amplified by the rho^-3 scaling of V
      const double roundoff = 4.0 * (grid->n() + 3) / (rho * rho * rho) * grid->band_limit() *
                              std::numeric_limits<double>::epsilon();
      leaf.noise_floor = std::max((kernel_residual(cold, rho) - cur.v).norm(), roundoff);
      if (cur.v.norm() <= 10.0 * leaf.noise_floor) {
        leaf.outer_at_noise_floor = true;
        std::ostringstream os;
        os << "outer tolerance " << cfg.tol_outer << " below the kernel-residual noise floor " << leaf.noise_floor
           << "; accepted |V| = " << cur.v.norm();
        leaf.notes.push_back(os.str());
      } else {
        // compass search inside the ball of radius 2 rho^2 around the guess
        std::vector<double> samples{cur.v.norm()};
        double step = 0.5 * rho * rho;
        while (step > 1e-6 * rho * rho && cur.v.norm() >= cfg.tol_outer && samples.size() < 60) {
          bool improved = false;
          for (int c = 0; c < m && !improved; ++c)
            for (double sgn : {1.0, -1.0}) {
              SVec p = cur.p;
              p[c] += sgn * step;
              if ((p - center_guess).norm() > radius) continue;
              OuterState trial = solve_at(p, cur.inner.w);
              samples.push_back(trial.v.norm());
              if (trial.v.norm() < cur.v.norm()) {
                cur = std::move(trial);
                improved = true;
                break;
              }
            }
          if (!improved) step *= 0.5;
        }
        if (cur.v.norm() >= cfg.tol_outer) {
          std::ostringstream os;
          os << "no zero of the kernel residual found near the center guess (best |V| = " << cur.v.norm() << ")";
          throw OuterFailureError(os.str(), samples);
        }
      }
    }
  }
  leaf.center = cur.p;
  leaf.inner = std::move(cur.inner);
  leaf.kernel_residual = cur.v;
  finish_leaf(leaf, cfg.k);
  return leaf;
}

SVec outer_solve_center(const MetricModel& metric, const SVec& center_guess, double rho, const GridPtr& grid,
                        const SolverConfig& cfg) {
  return solve_leaf(metric, center_guess, rho, grid, cfg).center;
}

FoliationReport foliate(const MetricModel& metric, const SVec& p0, const GridPtr& grid, const SolverConfig& cfg) {
  if (cfg.radii.size() < 3) throw ContractError("foliate: at least three radii are required");
  FoliationReport report;
  report.base_point = p0;
  report.notes = validate(cfg, metric, grid->n());
  SVec guess = p0;
  for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
    const double rho = cfg.radii[i];
    if (i == 0) {
      report.leaves.push_back(solve_leaf(metric, guess, rho, grid, cfg));
    } else {
      const double s = rho / cfg.radii[i - 1];
      const SphereField warm = (s * s) * report.leaves.back().w();
      report.leaves.push_back(solve_leaf(metric, guess, rho, grid, cfg, &warm));
    }
    guess = report.leaves.back().center;
    report.drift.push_back((guess - p0).norm());
  }
  const FoliationCheck check = check_foliation(metric, report);
  report.nesting_margin = check.margin;
  report.nesting_gaps = check.gaps;
  report.nested = check.passed;
  report.center_speed_constant = check.center_constant;
  if (!check.passed) report.notes.push_back(check.message);
  return report;
}

}  // namespace kleaf
