#include <sstream>

#include "doctest.h"
#include "kleaf/errors.hpp"
#include "run_config.hpp"

using namespace kleaf;
using namespace kleaf::cli;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

}  // namespace

TEST_CASE("sections, comments, lists and quoted values") {
  const RunConfig cfg = parse(
      "# leading comment\n"
      "command = foliate\n"
      "n = 3   # trailing comment\n"
      "[grid]\n"
      "L = 12\n"
      "[metric]\n"
      "family = conformal_bump\n"
      "amplitude = 0.25\n"
      "center = [0, 0.1, 0, 0]\n"
      "[solver]\n"
      "k = 2\n"
      "radii = 0.1, 0.05, 0.025, 0.0125\n"
      "[output]\n"
      "dir = \"out dir\"\n");
  CHECK(cfg.command == "foliate");
  CHECK(cfg.n == 3);
  CHECK(cfg.band_limit == 12);
  CHECK(cfg.metric.family == "conformal_bump");
  CHECK(cfg.metric.amplitude == 0.25);
  CHECK(cfg.metric.center == std::vector<double>{0, 0.1, 0, 0});
  CHECK(cfg.solver.k == 2);
  CHECK(cfg.solver.radii.size() == 4);
  CHECK(cfg.out_dir == "out dir");
  CHECK(cfg.entries.front().first == "command");
  CHECK(cfg.entries.size() == 9);
}

TEST_CASE("defaults") {
  RunConfig cfg = parse("");
  CHECK(cfg.n == 2);
  resolve_defaults(cfg);
  CHECK(cfg.band_limit == 24);
  RunConfig three = parse("n = 3\n");
  resolve_defaults(three);
  CHECK(three.band_limit == 12);
  CHECK(cfg.solver.radii.size() == 5);
  CHECK(cfg.metric.family == "flat");
  CHECK(cfg.seed == 1);
}

TEST_CASE("malformed input is rejected with the line number") {
  CHECK_THROWS_WITH_AS(parse("n = 2\nbogus = 1\n"), doctest::Contains("test.cfg:2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("n = 2\nn = 3\n"), doctest::Contains("duplicate"), ConfigError);
  CHECK_THROWS_AS(parse("[solver\nk = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse("n = two\n"), ConfigError);
  CHECK_THROWS_AS(parse("[metric]\nfamily = torus\n"), ConfigError);
  CHECK_THROWS_AS(parse("[verify]\nlipschitz = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("[solver]\nradii = 0.1, x\n"), ConfigError);
}

TEST_CASE("polynomials") {
  const Polynomial p = parse_polynomial("0.5 x0^2 x1 - 0.1 x2 + 2e-3", 3);
  REQUIRE(p.size() == 3);
  CHECK(p[0].coefficient == 0.5);
  CHECK(p[0].exponents[0] == 2);
  CHECK(p[0].exponents[1] == 1);
  CHECK(p[1].coefficient == -0.1);
  CHECK(p[1].exponents[2] == 1);
  CHECK(p[2].coefficient == doctest::Approx(2e-3));
  CHECK(parse_polynomial("", 3).empty());
  CHECK_THROWS_AS(parse_polynomial("x5", 3), ConfigError);
  CHECK_THROWS_AS(parse_polynomial("0.3 y1", 3), ConfigError);
}

TEST_CASE("semantic validation") {
  RunConfig cfg = parse("[solver]\nk = 3\n");
  cfg.command = "leaf";
  CHECK_THROWS_AS(validate_run(cfg, build_metric(cfg)), ConfigError);

  cfg = parse("[grid]\nL = 6\n");
  cfg.command = "leaf";
  CHECK_THROWS_AS(validate_run(cfg, build_metric(cfg)), ConfigError);

  cfg = parse("[solver]\nradii = 0.1, 0.05, 0.025\n");
  resolve_defaults(cfg);
  cfg.command = "foliate";
  CHECK_THROWS_AS(validate_run(cfg, build_metric(cfg)), ConfigError);
  cfg.command = "leaf";
  CHECK_NOTHROW(validate_run(cfg, build_metric(cfg)));
  cfg.command = "unknown";
  CHECK_THROWS_AS(validate_run(cfg, build_metric(cfg)), ConfigError);

  CHECK_THROWS_AS(build_metric(parse("n = 4\n")), ConfigError);
  CHECK_THROWS_AS(build_metric(parse("[metric]\nfamily = conformal_bump\nquadratic = 1, 2\n")), ConfigError);
}

TEST_CASE("metric construction and base point") {
  const RunConfig bump = parse(
      "[metric]\nfamily = conformal_bump\namplitude = 0.3\ncenter = 0.1, 0, 0\nquadratic = 1, 1.5, 2.2\n");
  const MetricModel m = build_metric(bump);
  CHECK(m.dim() == 3);
  CHECK(base_point(bump, m)[0] == 0.1);
  const RunConfig custom = parse("[metric]\nfamily = custom\nlog_factor = 0.1 x0^2\nperturbation.01 = 0.05 x2\n");
  CHECK(build_metric(custom).dim() == 3);
  CHECK_THROWS_AS(build_metric(parse("[metric]\nfamily = custom\nperturbation.05 = x0\n")), ConfigError);
}
