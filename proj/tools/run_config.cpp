#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kleaf/errors.hpp"

namespace kleaf::cli {

RunConfig::RunConfig() { solver.radii = {0.1, 0.07, 0.05, 0.035, 0.025}; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const char c = key[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
    if (c == '.' && key[i + 1] == '.') return false;
  }
  return true;
}

struct Entry {
  std::string key, value, where;
};

[[noreturn]] void fail(const Entry& e, const std::string& msg) {
  throw ConfigError(e.where + ": " + e.key + ": " + msg);
}

double to_double(const Entry& e, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) fail(e, "expected a number, got '" + t + "'");
  return v;
}

long long to_int(const Entry& e, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) fail(e, "expected an integer, got '" + t + "'");
  return v;
}

bool to_bool(const Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  fail(e, "expected true or false");
}

std::vector<double> to_list(const Entry& e) {
  std::string t = trim(e.value);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') fail(e, "unterminated list");
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  if (trim(t).empty()) return out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(e, item));
  return out;
}

std::string to_choice(const Entry& e, std::initializer_list<const char*> choices) {
  for (const char* c : choices)
    if (e.value == c) return e.value;
  std::string all;
  for (const char* c : choices) all += std::string(all.empty() ? "" : ", ") + c;
  fail(e, "expected one of " + all);
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& origin) {
  std::vector<Entry> entries;
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!section.empty() && !valid_key(section)) throw ConfigError(where + ": invalid section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    for (const Entry& e : entries)
      if (e.key == key) throw ConfigError(where + ": duplicate key '" + key + "' (first at " + e.where + ")");
    entries.push_back({key, value, where});
  }

  RunConfig cfg;
  using Setter = std::function<void(const Entry&)>;
  const std::map<std::string, Setter> setters = {
      {"command", [&](const Entry& e) { cfg.command = e.value; }},
      {"n", [&](const Entry& e) { cfg.n = static_cast<int>(to_int(e, e.value)); }},
      {"point", [&](const Entry& e) { cfg.point = to_list(e); }},
      {"refine_point", [&](const Entry& e) { cfg.refine_point = to_bool(e); }},
      {"seed", [&](const Entry& e) { cfg.seed = static_cast<std::uint64_t>(to_int(e, e.value)); }},
      {"threads", [&](const Entry& e) { cfg.threads = static_cast<int>(to_int(e, e.value)); }},
      {"output.dir", [&](const Entry& e) { cfg.out_dir = e.value; }},
      {"grid.L", [&](const Entry& e) { cfg.band_limit = static_cast<int>(to_int(e, e.value)); }},
      {"metric.family",
       [&](const Entry& e) { cfg.metric.family = to_choice(e, {"flat", "space_form", "conformal_bump", "custom"}); }},
      {"metric.kappa", [&](const Entry& e) { cfg.metric.kappa = to_double(e, e.value); }},
      {"metric.amplitude", [&](const Entry& e) { cfg.metric.amplitude = to_double(e, e.value); }},
      {"metric.center", [&](const Entry& e) { cfg.metric.center = to_list(e); }},
      {"metric.quadratic", [&](const Entry& e) { cfg.metric.quadratic = to_list(e); }},
      {"metric.skew", [&](const Entry& e) { cfg.metric.skew = to_double(e, e.value); }},
      {"metric.domain_radius", [&](const Entry& e) { cfg.metric.domain_radius = to_double(e, e.value); }},
      {"metric.log_factor", [&](const Entry& e) { cfg.metric.log_factor = e.value; }},
      {"metric.oracle",
       [&](const Entry& e) { cfg.metric.oracle = to_choice(e, {"analytic", "finite_difference"}); }},
      {"metric.fd_step", [&](const Entry& e) { cfg.metric.fd_step = to_double(e, e.value); }},
      {"metric.fd_accuracy", [&](const Entry& e) { cfg.metric.fd_accuracy = static_cast<int>(to_int(e, e.value)); }},
      {"solver.k", [&](const Entry& e) { cfg.solver.k = static_cast<int>(to_int(e, e.value)); }},
      {"solver.tol_inner", [&](const Entry& e) { cfg.solver.tol_inner = to_double(e, e.value); }},
      {"solver.tol_outer", [&](const Entry& e) { cfg.solver.tol_outer = to_double(e, e.value); }},
      {"solver.max_inner", [&](const Entry& e) { cfg.solver.max_inner = static_cast<int>(to_int(e, e.value)); }},
      {"solver.max_outer", [&](const Entry& e) { cfg.solver.max_outer = static_cast<int>(to_int(e, e.value)); }},
      {"solver.damping", [&](const Entry& e) { cfg.solver.damping = to_double(e, e.value); }},
      {"solver.radii", [&](const Entry& e) { cfg.solver.radii = to_list(e); }},
      {"solver.seed_mode",
       [&](const Entry& e) {
         cfg.solver.seed_mode = to_choice(e, {"zero", "expansion"}) == "zero" ? SolverConfig::SeedMode::zero
                                                                              : SolverConfig::SeedMode::expansion;
       }},
      {"solver.move_center", [&](const Entry& e) { cfg.solver.move_center = to_bool(e); }},
      {"verify.directions", [&](const Entry& e) { cfg.verify.directions = static_cast<int>(to_int(e, e.value)); }},
      {"verify.expansion_radii", [&](const Entry& e) { cfg.verify.expansion_radii = to_list(e); }},
      {"verify.sigma_radii", [&](const Entry& e) { cfg.verify.sigma_radii = to_list(e); }},
      {"verify.linearized_radii", [&](const Entry& e) { cfg.verify.linearized_radii = to_list(e); }},
      {"verify.projection_instances",
       [&](const Entry& e) { cfg.verify.projection_instances = static_cast<int>(to_int(e, e.value)); }},
      {"verify.lipschitz", [&](const Entry& e) { cfg.verify.lipschitz = to_bool(e); }},
      {"verify.lipschitz_pairs",
       [&](const Entry& e) { cfg.verify.lipschitz_pairs = static_cast<int>(to_int(e, e.value)); }},
      {"verify.lipschitz_radii", [&](const Entry& e) { cfg.verify.lipschitz_radii = to_list(e); }},
  };
  for (const Entry& e : entries) {
    cfg.entries.emplace_back(e.key, e.value);
    if (const auto it = setters.find(e.key); it != setters.end()) {
      it->second(e);
      continue;
    }
    // metric.perturbation.<i><j> = polynomial
    const std::string prefix = "metric.perturbation.";
    if (e.key.rfind(prefix, 0) == 0 && e.key.size() == prefix.size() + 2 && std::isdigit(e.key[prefix.size()]) &&
        std::isdigit(e.key[prefix.size() + 1])) {
      cfg.metric.perturbation.push_back({{e.key[prefix.size()] - '0', e.key[prefix.size() + 1] - '0'}, e.value});
      continue;
    }
    fail(e, "unknown key");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

Polynomial parse_polynomial(const std::string& text, int dim) {
  Polynomial out;
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) return out;
  // split into signed terms
  std::vector<std::string> terms;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool exponent_sign = i > 0 && (s[i - 1] == 'e' || s[i - 1] == 'E') && i > 1 &&
                               std::isdigit(static_cast<unsigned char>(s[i - 2]));
    if ((c == '+' || c == '-') && !cur.empty() && !exponent_sign) {
      terms.push_back(cur);
      cur.clear();
    }
    cur += c;
  }
  terms.push_back(cur);
  for (const std::string& t : terms) {
    PolynomialTerm term;
    term.coefficient = 1.0;
    std::size_t i = 0;
    if (t[i] == '+' || t[i] == '-') {
      if (t[i] == '-') term.coefficient = -1.0;
      ++i;
    }
    // optional numeric coefficient
    std::size_t j = i;
    while (j < t.size() && t[j] != 'x' && t[j] != '*') ++j;
    if (j > i) {
      double c = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data() + i, t.data() + j, c);
      if (ec != std::errc() || ptr != t.data() + j) throw ConfigError("polynomial: bad coefficient in '" + t + "'");
      term.coefficient *= c;
    }
    i = j;
    while (i < t.size()) {
      if (t[i] == '*') {
        ++i;
        continue;
      }
      if (t[i] != 'x' || i + 1 >= t.size() || !std::isdigit(static_cast<unsigned char>(t[i + 1])))
        throw ConfigError("polynomial: expected x<index> in '" + t + "'");
      const int var = t[i + 1] - '0';
      if (var >= dim) throw ConfigError("polynomial: variable x" + std::to_string(var) + " out of range");
      i += 2;
      int power = 1;
      if (i < t.size() && t[i] == '^') {
        std::size_t k = i + 1;
        while (k < t.size() && std::isdigit(static_cast<unsigned char>(t[k]))) ++k;
        if (k == i + 1) throw ConfigError("polynomial: missing exponent in '" + t + "'");
        power = std::stoi(t.substr(i + 1, k - i - 1));
        i = k;
      }
      term.exponents[var] += power;
    }
    out.push_back(term);
  }
  return out;
}

void resolve_defaults(RunConfig& cfg) {
  if (cfg.band_limit == 0) cfg.band_limit = cfg.n == 3 ? 12 : 24;
}

MetricModel build_metric(const RunConfig& cfg) {
  const int dim = cfg.n + 1;
  if (cfg.n != 2 && cfg.n != 3) throw ConfigError("n must be 2 or 3");
  const MetricSpec& m = cfg.metric;
  MetricModel model = MetricModel::flat(dim);
  if (m.family == "space_form") {
    model = MetricModel::space_form(dim, m.kappa);
  } else if (m.family == "conformal_bump") {
    BumpParams b;
    b.amplitude = m.amplitude;
    b.skew = m.skew;
    b.center = SVec::Zero(dim);
    if (!m.center.empty()) {
      if (static_cast<int>(m.center.size()) != dim) throw ConfigError("metric.center must have n+1 entries");
      for (int i = 0; i < dim; ++i) b.center[i] = m.center[i];
    }
    b.quadratic = SMat::Identity(dim, dim);
    if (static_cast<int>(m.quadratic.size()) == dim) {
      for (int i = 0; i < dim; ++i) b.quadratic(i, i) = m.quadratic[i];
    } else if (static_cast<int>(m.quadratic.size()) == dim * dim) {
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) b.quadratic(i, j) = m.quadratic[i * dim + j];
    } else if (!m.quadratic.empty()) {
      throw ConfigError("metric.quadratic must have n+1 or (n+1)^2 entries");
    }
    if (m.domain_radius > 0.0) b.domain_radius = m.domain_radius;
    model = MetricModel::conformal_bump(dim, b);
  } else if (m.family == "custom") {
    CustomParams c;
    c.log_factor = parse_polynomial(m.log_factor, dim);
    for (const auto& [ij, text] : m.perturbation) {
      if (ij.first >= dim || ij.second >= dim) throw ConfigError("metric.perturbation index out of range");
      c.perturbation.push_back({ij, parse_polynomial(text, dim)});
    }
    if (m.domain_radius > 0.0) c.domain_radius = m.domain_radius;
    model = MetricModel::custom(dim, c);
  }
  if (m.oracle == "finite_difference") {
    DerivativeOracle o;
    o.kind = DerivativeOracle::Kind::finite_difference;
    o.step = m.fd_step;
    o.accuracy = m.fd_accuracy;
    model = model.with_oracle(o);
  }
  return model;
}

SVec base_point(const RunConfig& cfg, const MetricModel& metric) {
  const int dim = metric.dim();
  SVec p = SVec::Zero(dim);
  if (!cfg.point.empty()) {
    if (static_cast<int>(cfg.point.size()) != dim) throw ConfigError("point must have n+1 entries");
    for (int i = 0; i < dim; ++i) p[i] = cfg.point[i];
  } else if (metric.family() == MetricFamily::conformal_bump) {
    p = metric.bump().center;
  }
  if (cfg.refine_point) p = refine_scalar_critical_point(metric, p).point;
  return p;
}

void validate_run(const RunConfig& cfg, const MetricModel& metric) {
  if (std::find_if(std::begin(kCommands), std::end(kCommands), [&](const char* c) { return cfg.command == c; }) ==
      std::end(kCommands))
    throw ConfigError("unknown command '" + cfg.command + "'");
  if (cfg.band_limit < 8) throw ConfigError("grid.L must be at least 8");
  if (cfg.threads < 1) throw ConfigError("threads must be positive");
  if (cfg.verify.directions < 1 || cfg.verify.projection_instances < 0 || cfg.verify.lipschitz_pairs < 1)
    throw ConfigError("verify counts must be positive");
  try {
    validate(cfg.solver, metric, cfg.n);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.solver.radii.empty()) throw ConfigError("solver.radii must not be empty");
  if ((cfg.command == "foliate" || cfg.command == "verify-all") && cfg.solver.radii.size() < 4)
    throw ConfigError("solver.radii needs at least 4 radii for " + cfg.command);
  for (const auto* list : {&cfg.verify.expansion_radii, &cfg.verify.sigma_radii, &cfg.verify.linearized_radii})
    if (list->size() < 4) throw ConfigError("verification radius lists need at least 4 entries");
  if (cfg.verify.lipschitz_radii.size() < 2) throw ConfigError("verify.lipschitz_radii needs 2 entries");
}

}  // namespace kleaf::cli
