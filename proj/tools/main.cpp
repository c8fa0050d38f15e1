#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "kleaf/errors.hpp"
#include "kleaf/parallel.hpp"
#include "kleaf/solver.hpp"
#include "kleaf/symfunc.hpp"
#include "kleaf/verify.hpp"
#include "report_json.hpp"
#include "run_config.hpp"

using namespace kleaf;
using namespace kleaf::cli;

namespace {

struct Context {
  RunConfig cfg;
  MetricModel metric;
  SVec point;
  std::filesystem::path out;
  Json report;
};

std::string leaf_file(double rho) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "leaf_%.6g.csv", rho);
  return buf;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

void write_leaf(const Context& ctx, const Leaf& leaf) {
  std::ofstream os(ctx.out / leaf_file(leaf.rho));
  if (!os) throw Error("cannot write leaf CSV");
  write_leaf_csv(os, leaf, ctx.cfg.solver.k);
}

bool add_check(Context& ctx, const CheckReport& c) {
  ctx.report["checks"].push_back(to_json(c));
  return c.passed;
}

GridPtr grid(const Context& ctx) { return SphereGrid::build(ctx.cfg.n, ctx.cfg.band_limit); }

// ---------------------------------------------------------------------------

bool run_curvature(Context& ctx) {
  const CurvatureAtPoint curv = curvature_at(ctx.metric, ctx.point);
  ctx.report["curvature"] = to_json(curv);
  return curv.warnings.empty();
}

bool run_expand_check(Context& ctx) {
  return add_check(ctx, check_metric_expansion(ctx.metric, ctx.point, ctx.cfg.verify.directions,
                                               ctx.cfg.verify.expansion_radii, ctx.cfg.seed));
}

bool run_leaf(Context& ctx) {
  const Leaf leaf = solve_leaf(ctx.metric, ctx.point, ctx.cfg.solver.radii.front(), grid(ctx), ctx.cfg.solver);
  ctx.report["leaf"] = to_json(leaf);
  write_leaf(ctx, leaf);
  return leaf.hk_spread < ctx.cfg.solver.tol_inner;
}

CheckReport foliation_check(const FoliationReport& rep) {
  CheckReport c;
  c.name = "foliation";
  c.set("nesting_margin", rep.nesting_margin);
  c.set("center_speed_constant", rep.center_speed_constant);
  std::vector<double> rho;
  for (const Leaf& l : rep.leaves) rho.push_back(l.rho);
  FitResult drift = fit_power_law(rho, rep.drift, 1e-9);
  c.set("drift_exponent", drift.identically_zero ? 0.0 : drift.exponent);
  c.passed = rep.nested && drift.passes(1.8);
  for (const std::string& n : rep.notes) c.notes.push_back(n);
  c.add_fit("drift", std::move(drift));
  return c;
}

bool foliation_part(Context& ctx, const GridPtr& g) {
  const FoliationReport rep = foliate(ctx.metric, ctx.point, g, ctx.cfg.solver);
  Json fj;
  fj["schema_version"] = kSchemaVersion;
  fj["foliation"] = to_json(rep);
  write_json(ctx.out / "foliation.json", fj);
  for (const Leaf& l : rep.leaves) write_leaf(ctx, l);
  bool ok = add_check(ctx, foliation_check(rep));
  ok = add_check(ctx, check_volume_expansion(ctx.metric, rep)) && ok;
  return ok;
}

bool run_foliate(Context& ctx) { return foliation_part(ctx, grid(ctx)); }

bool run_moments(Context& ctx) {
  bool ok = true;
  for (int n : {2, 3}) ok = add_check(ctx, check_sphere_moments(SphereGrid::build(n, ctx.cfg.band_limit))) && ok;
  return ok;
}

CheckReport projection_suite(const Context& ctx, const GridPtr& g) {
  CheckReport all;
  all.name = "projection_lemma";
  all.passed = true;
  double worst = 0.0;
  auto absorb = [&](const CheckReport& r) {
    worst = std::max(worst, r.get("relative_error"));
    all.passed = all.passed && r.passed;
  };
  const CheckReport own = check_projection_lemma(curvature_at(ctx.metric, ctx.point), g);
  absorb(own);
  all.set("metric_relative_error", own.get("relative_error"));
  for (int i = 0; i < ctx.cfg.verify.projection_instances; ++i)
    absorb(check_projection_lemma(random_curvature(ctx.metric.dim(), ctx.cfg.seed * 1000 + i), g));
  all.set("instances", ctx.cfg.verify.projection_instances + 1);
  all.set("max_relative_error", worst);
  return all;
}

bool run_verify_all(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const GridPtr g = grid(ctx);
  bool ok = add_check(ctx, check_sphere_moments(g));
  ok = add_check(ctx, check_metric_expansion(ctx.metric, ctx.point, cfg.verify.directions,
                                             cfg.verify.expansion_radii, cfg.seed)) && ok;
  ok = add_check(ctx, check_sigma_expansion(ctx.metric, ctx.point, cfg.solver.k, g, cfg.verify.sigma_radii)) && ok;
  ok = add_check(ctx, projection_suite(ctx, g)) && ok;
  ok = foliation_part(ctx, g) && ok;
  ok = add_check(ctx, check_parity_cancellations(ctx.metric, ctx.point, g, cfg.solver, cfg.solver.radii)) && ok;
  const SphereField w = SphereField::from_function(g, [](const SVec& x) {
    return 0.3 * x[0] * x[1] + 0.2 * (x[2] * x[2] - 1.0 / 3.0) + 0.1 * x[0] + 0.1 * x[0] * x[1] * x[2];
  });
  ok = add_check(ctx, check_linearized_operator(ctx.metric, ctx.point, w, 1, cfg.verify.linearized_radii)) && ok;
  if (cfg.verify.lipschitz)
    ok = add_check(ctx, check_lipschitz(ctx.metric, ctx.point, g, cfg.solver, cfg.verify.lipschitz_radii,
                                        cfg.verify.lipschitz_pairs, cfg.seed)) && ok;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leaves of constant sigma_k curvature around critical points of the scalar curvature"};
  std::string command, config_path, out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> names(std::begin(kCommands), std::end(kCommands));
  app.add_option("command", command, "curvature | expand-check | leaf | foliate | verify-all | moments")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--threads", threads, "worker threads (overrides threads)");
  app.add_option("--seed", seed, "random seed (overrides seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::optional<Context> ctx;
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    cfg.command = command;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.seed = *seed;
    resolve_defaults(cfg);
    MetricModel metric = build_metric(cfg);
    validate_run(cfg, metric);
    const SVec p = base_point(cfg, metric);
    ctx.emplace(Context{cfg, metric, p, cfg.out_dir, Json::object()});
  } catch (const Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }

  set_thread_count(ctx->cfg.threads);
  Json& report = ctx->report;
  report["schema_version"] = kSchemaVersion;
  report["command"] = ctx->cfg.command;
  Json echo = Json::object();
  for (const auto& [k, v] : ctx->cfg.entries)
    if (k != "threads" && k != "output.dir") echo[k] = v;
  report["config"] = echo;
  report["metric"] = ctx->metric.describe();
  report["seed"] = ctx->cfg.seed;
  report["band_limit"] = ctx->cfg.band_limit;
  report["base_point"] = to_json(ctx->point);
  report["checks"] = Json::array();

  int status = 0;
  try {
    std::filesystem::create_directories(ctx->out);
    bool passed = false;
    const std::string& c = ctx->cfg.command;
    if (c == "curvature") passed = run_curvature(*ctx);
    else if (c == "expand-check") passed = run_expand_check(*ctx);
    else if (c == "leaf") passed = run_leaf(*ctx);
    else if (c == "foliate") passed = run_foliate(*ctx);
    else if (c == "verify-all") passed = run_verify_all(*ctx);
    else passed = run_moments(*ctx);
    report["passed"] = passed;
    status = passed ? 0 : 1;
  } catch (const Error& e) {
    report["passed"] = false;
    report["error"] = error_json(e);
    std::cerr << e.kind() << " error: " << e.what() << "\n";
    status = 1;
  } catch (const std::exception& e) {
    report["passed"] = false;
    report["error"] = {{"kind", "internal"}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << "\n";
    status = 1;
  }
  try {
    write_json(ctx->out / "report.json", report);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  for (const Json& check : report["checks"])
    std::cout << (check["passed"].get<bool>() ? "PASS " : "FAIL ") << check["name"].get<std::string>() << "\n";
  std::cout << (status == 0 ? "ok" : "failed") << ": " << (ctx->out / "report.json").string() << "\n";
  return status;
}
