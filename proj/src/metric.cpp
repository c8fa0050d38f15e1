#include <cmath>
#include <limits>
#include <sstream>

#include "kleaf/errors.hpp"
#include "kleaf/manifold.hpp"

namespace kleaf {

const char* to_string(MetricFamily family) {
  switch (family) {
    case MetricFamily::flat: return "flat";
    case MetricFamily::space_form: return "space_form";
    case MetricFamily::conformal_bump: return "conformal_bump";
    case MetricFamily::custom: return "custom";
  }
  return "unknown";
}

namespace {

void check_dim(int dim) {
  if (dim < 2 || dim > kMaxAmbientDim)
    throw CapabilityError("ambient dimension must be in [2, 4], got " + std::to_string(dim));
}

std::array<Jet, kMaxAmbientDim> coordinate_jets(const SVec& x, int order) {
  std::array<Jet, kMaxAmbientDim> vars;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) vars[i] = Jet::variable(n, order, x[i], i);
  return vars;
}

Jet evaluate_polynomial(const Polynomial& poly, const std::array<Jet, kMaxAmbientDim>& vars,
                        int dim, int order) {
  Jet sum = Jet::constant(dim, order, 0.0);
  for (const auto& term : poly) {
    Jet prod = Jet::constant(dim, order, term.coefficient);
    for (int i = 0; i < dim; ++i)
      for (int e = 0; e < term.exponents[i]; ++e) prod = prod * vars[i];
    sum = sum + prod;
  }
  return sum;
}

}  // namespace

MetricModel MetricModel::flat(int dim) {
  check_dim(dim);
  MetricModel m;
  m.dim_ = dim;
  m.family_ = MetricFamily::flat;
  return m;
}

MetricModel MetricModel::space_form(int dim, double kappa) {
  check_dim(dim);
  MetricModel m;
  m.dim_ = dim;
  m.family_ = MetricFamily::space_form;
  m.kappa_ = kappa;
  return m;
}

MetricModel MetricModel::conformal_bump(int dim, BumpParams params) {
  check_dim(dim);
  if (params.center.size() == 0) params.center = SVec::Zero(dim);
  if (params.quadratic.size() == 0) params.quadratic = SMat::Identity(dim, dim);
  if (params.center.size() != dim || params.quadratic.rows() != dim ||
      params.quadratic.cols() != dim)
    throw ContractError("conformal_bump: center/quadratic form do not match dimension");
  if (params.skew != 0.0 && dim < 3)
    throw CapabilityError("conformal_bump: skew term needs ambient dimension >= 3");
  if (!(params.domain_radius > 0.0)) throw ContractError("conformal_bump: domain radius must be positive");
  params.quadratic = 0.5 * (params.quadratic + params.quadratic.transpose()).eval();
  MetricModel m;
  m.dim_ = dim;
  m.family_ = MetricFamily::conformal_bump;
  m.bump_ = std::move(params);
  return m;
}

MetricModel MetricModel::custom(int dim, CustomParams params) {
  check_dim(dim);
  for (const auto& [idx, poly] : params.perturbation) {
    if (idx.first < 0 || idx.second < 0 || idx.first >= dim || idx.second >= dim)
      throw ContractError("custom metric: perturbation index out of range");
    (void)poly;
  }
  MetricModel m;
  m.dim_ = dim;
  m.family_ = MetricFamily::custom;
  m.custom_ = std::make_shared<const CustomParams>(std::move(params));
  return m;
}

MetricModel MetricModel::with_oracle(DerivativeOracle oracle) const {
  if (oracle.kind == DerivativeOracle::Kind::finite_difference) {
    if (!(oracle.step > 0.0)) throw ContractError("finite-difference step must be positive");
    if (oracle.accuracy != 2 && oracle.accuracy != 4)
      throw CapabilityError("finite-difference accuracy must be 2 or 4");
  }
  MetricModel m = *this;
  m.oracle_ = oracle;
  return m;
}

bool MetricModel::conformal_only() const {
  return family_ != MetricFamily::custom || custom_->perturbation.empty();
}

bool MetricModel::has_conformal_fast_path() const {
  return oracle_.kind == DerivativeOracle::Kind::analytic && conformal_only();
}

Jet MetricModel::log_factor(const SVec& x, int order) const {
  const auto vars = coordinate_jets(x, order);
  switch (family_) {
    case MetricFamily::flat:
      return Jet::constant(dim_, order, 0.0);
    case MetricFamily::space_form: {
      Jet r2 = Jet::constant(dim_, order, 0.0);
      for (int i = 0; i < dim_; ++i) r2 = r2 + vars[i] * vars[i];
      return -log(1.0 + (0.25 * kappa_) * r2);
    }
    case MetricFamily::conformal_bump: {
      std::array<Jet, kMaxAmbientDim> y;
      for (int i = 0; i < dim_; ++i) y[i] = vars[i] - bump_.center[i];
      Jet quad = Jet::constant(dim_, order, 0.0);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
          if (bump_.quadratic(i, j) != 0.0) quad = quad + bump_.quadratic(i, j) * (y[i] * y[j]);
      Jet u = bump_.amplitude * exp(-0.5 * quad);
      if (bump_.skew != 0.0) u = u * (1.0 + bump_.skew * (y[0] * y[1] * y[2]));
      return u;
    }
    case MetricFamily::custom:
      return evaluate_polynomial(custom_->log_factor, vars, dim_, order);
  }
  return Jet::constant(dim_, order, 0.0);
}

MetricJet MetricModel::analytic_jet(const SVec& x, int order) const {
  MetricJet g;
  g.dim = dim_;
  g.order = order;
  const Jet factor = exp(2.0 * log_factor(x, order));
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      g(i, j) = i == j ? factor : Jet::constant(dim_, order, 0.0);
  if (family_ == MetricFamily::custom && !custom_->perturbation.empty()) {
    const auto vars = coordinate_jets(x, order);
    for (const auto& [idx, poly] : custom_->perturbation) {
      const Jet p = factor * evaluate_polynomial(poly, vars, dim_, order);
      g(idx.first, idx.second) = g(idx.first, idx.second) + p;
      if (idx.first != idx.second) g(idx.second, idx.first) = g(idx.second, idx.first) + p;
    }
  }
  return g;
}

SMat MetricModel::evaluate(const SVec& x) const {
  if (x.size() != dim_) throw ContractError("metric evaluate: point dimension mismatch");
  const MetricJet g = analytic_jet(x, 0);
  SMat out(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) out(i, j) = g(i, j).v;
  return out;
}

namespace {

struct Stencil {
  std::vector<double> offsets;
  std::vector<double> weights;
};

Stencil first_derivative_stencil(int accuracy) {
  if (accuracy == 2) return {{-1.0, 1.0}, {-0.5, 0.5}};
  return {{-2.0, -1.0, 1.0, 2.0}, {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0}};
}

// Nested central differences: derivative along dirs[0], dirs[1], ...
void accumulate_fd(const MetricModel& metric, const SVec& x, const std::vector<int>& dirs,
                   std::size_t level, double scale, double h, const Stencil& st, SMat& acc) {
  if (level == dirs.size()) {
    acc += scale * metric.evaluate(x);
    return;
  }
  for (std::size_t s = 0; s < st.offsets.size(); ++s) {
    SVec y = x;
    y[dirs[level]] += st.offsets[s] * h;
    accumulate_fd(metric, y, dirs, level + 1, scale * st.weights[s] / h, h, st, acc);
  }
}

}  // namespace

MetricJet MetricModel::finite_difference_jet(const SVec& x, int order) const {
  const Stencil st = first_derivative_stencil(oracle_.accuracy);
  const double h = oracle_.step;
  MetricJet g;
  g.dim = dim_;
  g.order = order;
  const SMat g0 = evaluate(x);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) g(i, j) = Jet::constant(dim_, order, g0(i, j));

  auto derivative = [&](const std::vector<int>& dirs) {
    SMat acc = SMat::Zero(dim_, dim_);
    accumulate_fd(*this, x, dirs, 0, 1.0, h, st, acc);
    return acc;
  };
  if (order >= 1) {
    for (int a = 0; a < dim_; ++a) {
      const SMat d = derivative({a});
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) g(i, j).d[a] = d(i, j);
    }
  }
  if (order >= 2) {
    for (int a = 0; a < dim_; ++a)
      for (int b = a; b < dim_; ++b) {
        const SMat d = derivative({a, b});
        for (int i = 0; i < dim_; ++i)
          for (int j = 0; j < dim_; ++j) {
            g(i, j).hess(a, b) = d(i, j);
            g(i, j).hess(b, a) = d(i, j);
          }
      }
  }
  if (order >= 3) {
    for (int a = 0; a < dim_; ++a)
      for (int b = a; b < dim_; ++b)
        for (int c = b; c < dim_; ++c) {
          const SMat d = derivative({a, b, c});
          const int perms[6][3] = {{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}};
          for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
              for (const auto& p : perms) g(i, j).third(p[0], p[1], p[2]) = d(i, j);
        }
  }
  return g;
}

MetricJet MetricModel::jet(const SVec& x, int order) const {
  if (x.size() != dim_) throw ContractError("metric jet: point dimension mismatch");
  if (order < 0 || order > 3) throw ContractError("metric jet: order must be in [0, 3]");
  if (order > oracle_.max_order)
    throw CapabilityError("derivative oracle supports order " + std::to_string(oracle_.max_order) +
                          ", requested " + std::to_string(order));
  if (oracle_.kind == DerivativeOracle::Kind::finite_difference && order > 0)
    return finite_difference_jet(x, order);
  return analytic_jet(x, order);
}

bool MetricModel::in_domain(const SVec& x) const {
  if (!x.allFinite()) return false;
  switch (family_) {
    case MetricFamily::flat: return true;
    case MetricFamily::space_form:
      return kappa_ >= 0.0 || 1.0 + 0.25 * kappa_ * x.squaredNorm() > 0.0;
    case MetricFamily::conformal_bump: return (x - bump_.center).norm() < bump_.domain_radius;
    case MetricFamily::custom: return x.norm() < custom_->domain_radius;
  }
  return false;
}

double MetricModel::injectivity_budget() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (family_) {
    case MetricFamily::flat: return inf;
    case MetricFamily::space_form: return kappa_ > 0.0 ? 0.9 * M_PI / std::sqrt(kappa_) : inf;
    case MetricFamily::conformal_bump: return bump_.domain_radius;
    case MetricFamily::custom: return custom_->domain_radius;
  }
  return inf;
}

std::string MetricModel::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(dim=" << dim_;
  if (family_ == MetricFamily::space_form) os << ", kappa=" << kappa_;
  if (family_ == MetricFamily::conformal_bump)
    os << ", amplitude=" << bump_.amplitude << ", skew=" << bump_.skew;
  os << ")";
  return os.str();
}

}  // namespace kleaf
