#include "report_json.hpp"

#include <iomanip>

namespace kleaf::cli {

Json to_json(const SVec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json to_json(const SMat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

Json to_json(const FitResult& fit) {
  Json j;
  j["exponent"] = fit.exponent;
  j["coefficient"] = fit.coefficient;
  j["residual"] = fit.residual;
  j["identically_zero"] = fit.identically_zero;
  Json s = Json::array();
  for (const auto& [r, v] : fit.samples) s.push_back({r, v});
  j["samples"] = s;
  return j;
}

Json to_json(const CheckReport& check) {
  Json j;
  j["name"] = check.name;
  j["passed"] = check.passed;
  Json nums = Json::object();
  for (const auto& [k, v] : check.numbers) nums[k] = v;
  j["numbers"] = nums;
  Json fits = Json::object();
  for (std::size_t i = 0; i < check.fits.size(); ++i) fits[check.fit_labels[i]] = to_json(check.fits[i]);
  j["fits"] = fits;
  j["notes"] = check.notes;
  return j;
}

Json to_json(const CurvatureAtPoint& curv) {
  Json j;
  j["point"] = to_json(curv.point);
  j["frame"] = to_json(curv.frame);
  j["riemann"] = curv.riemann.data();
  j["riemann_grad"] = curv.riemann_grad.data();
  j["ricci"] = to_json(curv.ricci);
  j["scalar"] = curv.scalar;
  j["scalar_grad"] = to_json(curv.scalar_grad);
  const CurvatureResiduals& r = curv.residuals;
  j["residuals"] = {{"antisym_first", r.antisym_first},   {"antisym_second", r.antisym_second},
                    {"pair_symmetry", r.pair_symmetry},   {"first_bianchi", r.first_bianchi},
                    {"second_bianchi", r.second_bianchi}, {"gradient_symmetries", r.gradient_symmetries}};
  j["warnings"] = curv.warnings;
  return j;
}

Json to_json(const Leaf& leaf) {
  Json j;
  j["rho"] = leaf.rho;
  j["center"] = to_json(leaf.center);
  j["kernel_residual"] = to_json(leaf.kernel_residual);
  j["hk_mean"] = leaf.hk_mean;
  j["hk_relative_spread"] = leaf.hk_spread;
  j["min_newton_eigenvalue"] = leaf.min_newton_eigenvalue;
  j["w_sup"] = leaf.w().values.cwiseAbs().maxCoeff();
  j["radius_min"] = leaf.rho * (1.0 - leaf.w().values.col(0).maxCoeff());
  j["radius_max"] = leaf.rho * (1.0 - leaf.w().values.col(0).minCoeff());
  const InnerResult& in = leaf.inner;
  j["inner"] = {{"iterations", in.iterations},
                {"projected_residual", in.projected_residual},
                {"final_damping", in.final_damping},
                {"history", in.history},
                {"contraction_ratios", in.contraction_ratios}};
  j["outer"] = {{"iterations", leaf.outer_iterations},
                {"inner_solves", leaf.inner_solves},
                {"history", leaf.outer_history},
                {"at_noise_floor", leaf.outer_at_noise_floor},
                {"noise_floor", leaf.noise_floor}};
  const LeafGeometry& g = leaf.geometry();
  j["geometry"] = {{"asymmetry", g.asymmetry},
                   {"orthogonality", g.orthogonality},
                   {"normalization", g.normalization},
                   {"max_energy_drift", g.embedding.max_energy_drift}};
  j["notes"] = leaf.notes;
  return j;
}

Json to_json(const FoliationReport& report) {
  Json j;
  j["base_point"] = to_json(report.base_point);
  j["nested"] = report.nested;
  j["nesting_margin"] = report.nesting_margin;
  j["nesting_gaps"] = report.nesting_gaps;
  j["center_speed_constant"] = report.center_speed_constant;
  j["drift"] = report.drift;
  Json leaves = Json::array();
  for (const Leaf& l : report.leaves) leaves.push_back(to_json(l));
  j["leaves"] = leaves;
  j["notes"] = report.notes;
  return j;
}

Json error_json(const Error& e) {
  Json j;
  j["kind"] = e.kind();
  j["message"] = e.what();
  if (const auto* c = dynamic_cast<const ConvergenceError*>(&e)) j["history"] = c->history();
  if (const auto* o = dynamic_cast<const OuterFailureError*>(&e)) j["samples"] = o->samples();
  if (const auto* d = dynamic_cast<const OutOfDomainError*>(&e)) j["exit_time"] = d->exit_time();
  if (const auto* s = dynamic_cast<const SolvabilityError*>(&e)) j["kernel_norm"] = s->kernel_norm();
  return j;
}

void write_leaf_csv(std::ostream& os, const Leaf& leaf, int k) {
  const LeafGeometry& g = leaf.geometry();
  const SphereGrid& grid = *g.grid;
  const int n = g.n;
  os << "index";
  for (int i = 0; i <= n; ++i) os << ",theta_" << i;
  os << ",weight,w,sigma_" << k;
  for (int i = 0; i < n; ++i) os << ",kappa_" << i;
  os << ",volume_density";
  for (int i = 0; i <= n; ++i) os << ",x_" << i;
  os << "\n" << std::setprecision(17);
  for (int i = 0; i < grid.size(); ++i) {
    os << i;
    const SVec t = grid.node(i);
    for (int a = 0; a <= n; ++a) os << "," << t[a];
    os << "," << grid.weights()[i] << "," << leaf.w().values(i, 0) << "," << g.sigmas(i, k);
    for (int a = 0; a < n; ++a) os << "," << g.principal[i][a];
    os << "," << g.volume_density[i];
    for (int a = 0; a <= n; ++a) os << "," << g.embedding.position[i][a];
    os << "\n";
  }
}

}  // namespace kleaf::cli
