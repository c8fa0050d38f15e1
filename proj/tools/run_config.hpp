#pragma once

// Run configuration for the command-line driver.
//
// Text format: one `key = value` per line, `#` starts a comment, `[name]`
// opens a section whose name prefixes the following keys ("name.key").
// Lists are comma separated, optionally wrapped in brackets.

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "kleaf/manifold.hpp"
#include "kleaf/solver.hpp"

namespace kleaf::cli {

struct MetricSpec {
  std::string family = "flat";
  double kappa = 1.0;
  double amplitude = 0.0;
  std::vector<double> center;
  std::vector<double> quadratic;  ///< dim entries (diagonal) or dim*dim (row major)
  double skew = 0.0;
  double domain_radius = -1.0;   ///< <= 0 keeps the family default
  std::string log_factor;        ///< polynomial text, custom family
  std::vector<std::pair<std::pair<int, int>, std::string>> perturbation;
  std::string oracle = "analytic";
  double fd_step = 1e-3;
  int fd_accuracy = 4;
};

struct VerifySpec {
  int directions = 8;
  std::vector<double> expansion_radii{0.4, 0.2, 0.1, 0.05};
  std::vector<double> sigma_radii{0.2, 0.1, 0.05, 0.025};
  std::vector<double> linearized_radii{0.2, 0.1, 0.05, 0.025};
  int projection_instances = 20;
  bool lipschitz = true;
  int lipschitz_pairs = 10;
  std::vector<double> lipschitz_radii{0.1, 0.05};
};

struct RunConfig {
  std::string command;
  MetricSpec metric;
  int n = 2;
  std::vector<double> point;  ///< base point; empty selects the metric's natural center
  bool refine_point = false;
  int band_limit = 0;  ///< 0 selects 24 for n = 2 and 12 for n = 3
  SolverConfig solver;
  VerifySpec verify;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::pair<std::string, std::string>> entries;  ///< as read, in file order

  RunConfig();
};

inline constexpr const char* kCommands[] = {"curvature", "expand-check", "leaf", "foliate", "verify-all", "moments"};

/// Throws ConfigError with the line number on malformed input or unknown keys.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);

/// Parses "0.5 x0^2 x1 - 0.1 x2" into monomials over `dim` variables.
Polynomial parse_polynomial(const std::string& text, int dim);

/// Fills values left at their "automatic" setting (band limit).
void resolve_defaults(RunConfig& cfg);

MetricModel build_metric(const RunConfig& cfg);
SVec base_point(const RunConfig& cfg, const MetricModel& metric);

/// Semantic checks that need the metric (k range, radii budget, command name).
/// Throws ConfigError.
void validate_run(const RunConfig& cfg, const MetricModel& metric);

}  // namespace kleaf::cli
