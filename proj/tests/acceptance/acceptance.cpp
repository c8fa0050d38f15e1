// Acceptance suite. One line per criterion; exit status is the number of
// failures. Usage: acceptance <path-to-kleaf-cli> <scratch-dir>

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include "kleaf/errors.hpp"
#include "kleaf/graphgeom.hpp"
#include "kleaf/solver.hpp"
#include "kleaf/symfunc.hpp"
#include "kleaf/verify.hpp"

using namespace kleaf;
namespace fs = std::filesystem;

namespace {

// Tolerances pinned by the acceptance criteria.
constexpr double kSigmaTol = 1e-10;
constexpr double kNewtonTol = 1e-9;
constexpr double kTraceDerivTol = 1e-6;
constexpr double kMomentTol = 1e-10;
constexpr double kProjectionTol = 1e-8;
constexpr double kExpansionExponent = 3.7;
constexpr double kQuadraticCoefTol = 1e-6;
constexpr double kGeodesicSphereTol = 1e-7;
constexpr double kCoefficientTol = 0.05;
constexpr double kProfileTol = 1e-7;
constexpr double kHkSpreadTol = 1e-9;
constexpr double kDriftExponent = 1.8;
constexpr double kLipschitzSpread = 0.5;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const Error& e) {
    out.passed = false;
    out.detail << " [" << e.kind() << " error: " << e.what() << "]";
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!out.passed) ++failures;
  std::printf("%s criterion %2d: %s |%s (%.1f s)\n", out.passed ? "PASS" : "FAIL", id, title.c_str(),
              out.detail.str().c_str(), secs);
  std::fflush(stdout);
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a + a.transpose());
}

double brute_sigma(const Eigen::VectorXd& lambda, int k) {
  const int n = static_cast<int>(lambda.size());
  double total = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double p = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) p *= lambda[i];
    total += p;
  }
  return total;
}

MetricModel skewed_bump() {
  BumpParams b;
  b.amplitude = 0.3;
  b.center = SVec::Zero(3);
  b.quadratic = SMat::Zero(3, 3);
  b.quadratic.diagonal() << 1.0, 1.5, 2.2;
  b.quadratic(0, 1) = b.quadratic(1, 0) = 0.2;
  b.skew = 0.8;
  return MetricModel::conformal_bump(3, b);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <kleaf-cli> <scratch-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  const SVec p = (SVec(3) << 0.1, -0.05, 0.2).finished();
  const MetricModel bump = skewed_bump();

  criterion(1, "sigma_k and Newton transforms on 200 random symmetric matrices", [](Outcome& o) {
    std::mt19937_64 rng(2024);
    double worst_sigma = 0, worst_newton = 0, worst_deriv = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + trial % 6;
      const SymMatrix a(random_symmetric(rng, n));
      const SymMatrix adot(random_symmetric(rng, n));
      const Eigen::VectorXd lambda = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.matrix()).eigenvalues();
      const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
      for (int k = 0; k <= n; ++k) {
        const double b = brute_sigma(lambda, k);
        worst_sigma = std::max(worst_sigma, std::abs(sigma_k(a, k) - b) / std::pow(scale, k));
      }
      const double tn = newton_transform(a, n).matrix().cwiseAbs().maxCoeff();
      worst_newton = std::max(worst_newton, tn / std::pow(scale, n));
      for (int k = 1; k <= n; ++k) {
        const double h = 1e-4;
        const double fd = (sigma_k(SymMatrix(a.matrix() + h * adot.matrix()), k) -
                           sigma_k(SymMatrix(a.matrix() - h * adot.matrix()), k)) / (2 * h);
        worst_deriv = std::max(worst_deriv, std::abs(fd - sigma_derivative(a, adot, k)) / (1 + std::abs(fd)));
      }
    }
    o.detail << " sigma " << fmt(worst_sigma) << ", T_n " << fmt(worst_newton) << ", d sigma " << fmt(worst_deriv);
    o.require(worst_sigma <= kSigmaTol, "sigma_k vs eigenvalues");
    o.require(worst_newton <= kNewtonTol, "T_n(A) = 0");
    o.require(worst_deriv <= kTraceDerivTol, "trace derivative");
  });

  criterion(2, "sphere moments on S^2 and S^3", [](Outcome& o) {
    for (int n : {2, 3}) {
      const CheckReport r = check_sphere_moments(SphereGrid::build(n, 16));
      const double e = std::max({r.get("relative_error_4_vs_22"), r.get("relative_error_4_vs_2")});
      o.detail << " n=" << n << " " << fmt(e);
      o.require(e <= kMomentTol, "moments n=" + std::to_string(n));
    }
  });

  criterion(3, "projection identity on 20 random Bianchi-compatible instances", [](Outcome& o) {
    double worst = 0;
    for (int dim : {3, 4}) {
      const GridPtr g = SphereGrid::build(dim - 1, 8);
      for (int i = 0; i < 10; ++i) {
        const CheckReport r = check_projection_lemma(random_curvature(dim, 100 + i), g);
        worst = std::max(worst, r.get("relative_error"));
      }
    }
    o.detail << " max rel " << fmt(worst);
    o.require(worst <= kProjectionTol, "projection closed form");
  });

  criterion(4, "metric expansion in normal coordinates", [&](Outcome& o) {
    const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
    const CheckReport sph = check_metric_expansion(MetricModel::space_form(3, 1.0), p, 6, radii, 2);
    const CheckReport bmp = check_metric_expansion(bump, p, 6, radii, 3);
    o.detail << " space form exponent " << fmt(sph.get("remainder_exponent")) << ", bump exponent "
             << fmt(bmp.get("remainder_exponent")) << ", quadratic err " << fmt(sph.get("quadratic_coefficient_error"));
    o.require(sph.get("remainder_exponent") >= kExpansionExponent, "space form exponent");
    o.require(bmp.get("remainder_exponent") >= kExpansionExponent, "bump exponent");
    o.require(sph.get("quadratic_coefficient_error") <= kQuadraticCoefTol, "quadratic coefficient");
  });

  criterion(5, "geodesic sphere sigma_k on space forms", [&](Outcome& o) {
    const GridPtr g = SphereGrid::build(2, 12);
    double worst = 0, worst_coef = 0;
    for (double kappa : {1.0, -1.0}) {
      const MetricModel m = MetricModel::space_form(3, kappa);
      for (double rho : {0.05, 0.1, 0.2}) {
        const LeafGeometry leaf = leaf_geometry(make_perturbed_sphere(m, p, rho, SphereField::constant(g, 0.0)));
        const double c = kappa > 0 ? 1 / std::tan(rho) : 1 / std::tanh(rho);
        for (int k : {1, 2}) {
          const double expect = binomial(2, k) * std::pow(c, k);
          worst = std::max(worst, (leaf.sigmas.col(k).array() - expect).abs().maxCoeff() / expect);
        }
      }
      for (int k : {1, 2}) {
        const CheckReport r = check_sigma_expansion(m, p, k, g, {0.2, 0.1, 0.05, 0.025});
        worst_coef = std::max(worst_coef, r.get("quadratic_coefficient_relative_error"));
      }
    }
    o.detail << " sigma rel " << fmt(worst) << ", coefficient rel " << fmt(worst_coef);
    o.require(worst <= kGeodesicSphereTol, "closed form sigma_k");
    o.require(worst_coef <= kCoefficientTol, "Richardson coefficient");
  });

  criterion(6, "leaf solve on the unit space form at rho = 0.1", [](Outcome& o) {
    const GridPtr g = SphereGrid::build(2, 16);
    const MetricModel m = MetricModel::space_form(3, 1.0);
    for (int k : {1, 2}) {
      SolverConfig cfg;
      cfg.k = k;
      const Leaf leaf = solve_leaf(m, SVec::Zero(3), 0.1, g, cfg);
      const double err = (leaf.rho * (1.0 - leaf.w().values.col(0).array()) - std::atan(0.1)).abs().maxCoeff();
      o.detail << " k=" << k << " profile " << fmt(err) << " spread " << fmt(leaf.hk_spread);
      o.require(err <= kProfileTol, "profile k=" + std::to_string(k));
      o.require(leaf.hk_spread <= kHkSpreadTol, "H_k spread k=" + std::to_string(k));
    }
  });

  // Shared by criteria 7 and 8.
  const GridPtr g16 = SphereGrid::build(2, 16);
  SolverConfig fol_cfg;
  fol_cfg.radii = {0.1, 0.07, 0.05, 0.035, 0.025};
  std::optional<FoliationReport> bump_foliation;

  criterion(7, "foliation around a nondegenerate scalar curvature critical point", [&](Outcome& o) {
    bump_foliation = foliate(bump, SVec::Zero(3), g16, fol_cfg);
    const FoliationReport& rep = *bump_foliation;
    std::vector<double> rho;
    for (const Leaf& l : rep.leaves) rho.push_back(l.rho);
    const FitResult drift = fit_power_law(rho, rep.drift, 1e-9);
    const CheckReport parity = check_parity_cancellations(bump, SVec::Zero(3), g16, fol_cfg, fol_cfg.radii);
    const FitResult& v = parity.fits[0];
    o.detail << " leaves " << rep.leaves.size() << ", margin " << fmt(rep.nesting_margin) << ", drift exponent "
             << fmt(drift.exponent) << ", |V| exponent " << fmt(v.exponent);
    o.require(rep.leaves.size() == 5, "all leaves converged");
    o.require(rep.nested && rep.nesting_margin > 0, "nesting");
    o.require(drift.passes(kDriftExponent), "drift exponent");
    o.require(v.passes(kDriftExponent), "kernel residual exponent");
  });

  criterion(8, "volume expansion coefficients", [&](Outcome& o) {
    SolverConfig cfg;
    cfg.radii = fol_cfg.radii;
    const MetricModel sph = MetricModel::space_form(3, 1.0);
    const CheckReport s = check_volume_expansion(sph, foliate(sph, SVec::Zero(3), SphereGrid::build(2, 10), cfg));
    o.detail << " space form " << fmt(s.get("boundary_relative_error")) << "/" << fmt(s.get("enclosed_relative_error"));
    o.require(s.passed, "space form");
    if (!bump_foliation) {
      o.require(false, "bump foliation unavailable");
      return;
    }
    const CheckReport b = check_volume_expansion(bump, *bump_foliation);
    o.detail << ", bump " << fmt(b.get("boundary_relative_error")) << "/" << fmt(b.get("enclosed_relative_error"));
    o.require(b.get("boundary_relative_error") <= kCoefficientTol, "bump boundary");
    o.require(b.get("enclosed_relative_error") <= kCoefficientTol, "bump enclosed");
  });

  criterion(9, "Lipschitz dependence of w on the center", [&](Outcome& o) {
    const CheckReport r = check_lipschitz(bump, SVec::Zero(3), g16, SolverConfig{}, {0.1, 0.05}, 10, 7);
    o.detail << " spread " << fmt(r.get("relative_spread"));
    o.require(r.get("relative_spread") <= kLipschitzSpread, "constant stable within 50%");
  });

  criterion(10, "verify-all reports are byte identical across runs", [&](Outcome& o) {
    const fs::path cfg = scratch / "determinism.cfg";
    {
      std::ofstream os(cfg);
      os << "n = 2\nseed = 5\n[grid]\nL = 8\n[metric]\nfamily = space_form\nkappa = 1\n"
            "[solver]\nk = 1\nradii = 0.1, 0.07, 0.05, 0.035\n[verify]\nprojection_instances = 4\nlipschitz = false\n";
    }
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = scratch / ("determinism_" + std::to_string(run));
      fs::remove_all(out);
      const std::string cmd = "\"" + cli + "\" verify-all --config \"" + cfg.string() + "\" --out \"" +
                              out.string() + "\" --threads " + std::to_string(run + 1) + " > /dev/null";
      const int rc = std::system(cmd.c_str());
      o.require(rc == 0, "run " + std::to_string(run) + " exit status");
      reports[run] = slurp(out / "report.json");
    }
    o.detail << " report bytes " << reports[0].size();
    o.require(!reports[0].empty() && reports[0] == reports[1], "identical bytes");
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
