#include "sdde/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/special_functions/legendre.hpp>

#include "sdde/errors.hpp"

namespace sdde {

QuadratureRule gauss_legendre(int nodes) {
  if (nodes < 1) throw DomainError("gauss_legendre needs at least one node");
  QuadratureRule rule;
  const auto zeros = boost::math::legendre_p_zeros<double>(nodes);  // non-negative zeros, ascending
  auto weight = [&](double x) {
    const double dp = boost::math::legendre_p_prime(nodes, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double z : zeros) {
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return rule;
}

namespace {

ArgLayout make_layout(std::size_t psi, std::size_t state, std::size_t param) { return ArgLayout{psi, state, param}; }

void check_core(const SmoothCore& core, std::size_t arity, std::size_t outputs, const char* which) {
  if (!core.eval || !core.grad || !core.hess) {
    throw DomainError(std::string(which) + " core must provide eval, grad and hess");
  }
  if (core.arity != arity || core.outputs != outputs) {
    std::ostringstream msg;
    msg << which << " core '" << core.name << "' has arity " << core.arity << " and " << core.outputs
        << " outputs; the atom layout needs arity " << arity << " and " << outputs << " outputs";
    throw DomainError(msg.str());
  }
}

void check_atoms(const DelayAtomSet& atoms, const char* which) {
  for (const auto& lag : atoms.point_lags) {
    if (!lag.value || !lag.rate) throw DomainError(std::string(which) + ": point lag needs value and rate");
  }
  if (atoms.kernel) {
    if (!atoms.kernel->value || !atoms.kernel->time_partial || atoms.kernel->rows == 0) {
      throw DomainError(std::string(which) + ": kernel needs rows, value and time partial");
    }
  }
}

void check_finite(const Vector& v, double t, const char* what) {
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << what << " is not finite at t = " << t;
    throw NumericError(msg.str());
  }
}

PsiMap make_map(const ModelSpec& model, const DelayAtomSet& atoms, const QuadratureRule& rule, double t) {
  PsiMap map;
  map.t = t;
  map.n = model.n();
  map.lags.reserve(atoms.point_lags.size());
  for (const auto& lag : atoms.point_lags) {
    const double v = lag.value(t);
    if (!(v >= 0.0 && v <= model.r())) {
      std::ostringstream msg;
      msg << "point lag " << v << " outside [0, " << model.r() << "] at t = " << t;
      throw DomainError(msg.str(), t);
    }
    map.lags.push_back(v);
  }
  if (atoms.kernel) {
    map.kernel = &*atoms.kernel;
    map.rule = &rule;
  }
  return map;
}

template <class Integrand>
Vector integrate_window(const Segment& seg, const QuadratureRule& rule, std::size_t rows, Integrand&& integrand) {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(rows));
  const auto bps = seg.breakpoints();
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    const double z0 = bps[i], z1 = bps[i + 1];
    if (!(z1 > z0)) continue;
    const double mid = 0.5 * (z0 + z1), half = 0.5 * (z1 - z0);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      acc += (half * rule.weights[k]) * integrand(mid + half * rule.nodes[k]);
    }
  }
  return acc;
}

std::pair<std::size_t, std::size_t> class_range(const ArgLayout& layout, ArgClass c) {
  switch (c) {
    case ArgClass::Psi:
      return {0, layout.psi};
    case ArgClass::State:
      return {layout.state_offset(), layout.state};
    case ArgClass::Param:
      return {layout.param_offset(), layout.param};
  }
  return {0, 0};
}

}  // namespace

ModelSpec::ModelSpec(std::size_t n, std::size_t p, std::size_t q, double r, double horizon, DelayAtomSet f_atoms,
                     SmoothCore f_core, DelayAtomSet tau_atoms, SmoothCore tau_core)
    : n_(n),
      p_(p),
      q_(q),
      r_(r),
      horizon_(horizon),
      f_atoms_(std::move(f_atoms)),
      f_core_(std::move(f_core)),
      tau_atoms_(std::move(tau_atoms)),
      tau_core_(std::move(tau_core)) {
  if (!(r_ > 0.0)) throw DomainError("model: r must be positive");
  if (!(horizon_ > 0.0)) throw DomainError("model: horizon T must be positive");
  if (n_ < 1) throw DomainError("model: state dimension n must be >= 1");
  check_atoms(f_atoms_, "f");
  check_atoms(tau_atoms_, "tau");
  f_layout_ = make_layout(f_atoms_.psi_size(n_), n_, p_);
  tau_layout_ = make_layout(tau_atoms_.psi_size(n_), 0, q_);
  check_core(f_core_, f_layout_.arity(), n_, "f");
  check_core(tau_core_, tau_layout_.arity(), 1, "tau");
  if (f_atoms_.kernel) f_rule_ = gauss_legendre(f_atoms_.kernel->nodes);
  if (tau_atoms_.kernel) tau_rule_ = gauss_legendre(tau_atoms_.kernel->nodes);
}

Vector PsiMap::gather(const Segment& h) const {
  Vector out(static_cast<Eigen::Index>(size()));
  const auto nn = static_cast<Eigen::Index>(n);
  for (std::size_t j = 0; j < lags.size(); ++j) out.segment(static_cast<Eigen::Index>(j) * nn, nn) = h(-lags[j]);
  if (kernel) {
    const double tt = t;
    const Kernel& k = *kernel;
    out.tail(static_cast<Eigen::Index>(k.rows)) =
        integrate_window(h, *rule, k.rows, [&](double z) -> Vector { return k.value(tt, z) * h(z); });
  }
  return out;
}

Vector kernel_time_derivative(const Kernel& kernel, const QuadratureRule& rule, double t, const Segment& seg) {
  return integrate_window(seg, rule, kernel.rows, [&](double z) -> Vector {
    return kernel.time_partial(t, z) * seg(z) + kernel.value(t, z) * seg.d1(z, Side::Right);
  });
}

Vector apply_phi_part(const PhiPart& part, const Segment& h) {
  Vector out = Vector::Zero(part.point_terms.empty() ? part.kernel_coeff.rows()
                                                     : part.point_terms.front().second.rows());
  for (const auto& [lag, m] : part.point_terms) out += m * h(-lag);
  if (part.map.kernel && part.kernel_coeff.size() > 0) {
    const Kernel& k = *part.map.kernel;
    const double t = part.map.t;
    out += part.kernel_coeff *
           integrate_window(h, *part.map.rule, k.rows, [&](double z) -> Vector { return k.value(t, z) * h(z); });
  }
  return out;
}

Vector apply_bilinear(const BilinearTable& table, ArgClass i, ArgClass j, const Vector& a, const Vector& b) {
  const auto [oi, ni] = class_range(table.layout, i);
  const auto [oj, nj] = class_range(table.layout, j);
  if (static_cast<std::size_t>(a.size()) != ni || static_cast<std::size_t>(b.size()) != nj) {
    throw DomainError("apply_bilinear: direction size does not match its argument class");
  }
  Vector out(static_cast<Eigen::Index>(table.hess.size()));
  for (std::size_t o = 0; o < table.hess.size(); ++o) {
    if (ni == 0 || nj == 0) {
      out[static_cast<Eigen::Index>(o)] = 0.0;
      continue;
    }
    const auto block = table.hess[o].block(static_cast<Eigen::Index>(oi), static_cast<Eigen::Index>(oj),
                                           static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(nj));
    out[static_cast<Eigen::Index>(o)] = a.dot(block * b);
  }
  return out;
}

Vector f_arguments(const ModelSpec& model, double t, const Segment& seg, const Vector& u, const Vector& theta) {
  if (static_cast<std::size_t>(u.size()) != model.n() || static_cast<std::size_t>(theta.size()) != model.p()) {
    throw DomainError("f arguments: u or theta has the wrong size", t);
  }
  const PsiMap map = make_map(model, model.f_atoms(), model.f_rule(), t);
  const ArgLayout& lay = model.f_layout();
  Vector args(static_cast<Eigen::Index>(lay.arity()));
  if (lay.psi > 0) args.head(static_cast<Eigen::Index>(lay.psi)) = map.gather(seg);
  args.segment(static_cast<Eigen::Index>(lay.state_offset()), static_cast<Eigen::Index>(lay.state)) = u;
  if (lay.param > 0) args.tail(static_cast<Eigen::Index>(lay.param)) = theta;
  return args;
}

Vector tau_arguments(const ModelSpec& model, double t, const Segment& seg, const Vector& xi) {
  if (static_cast<std::size_t>(xi.size()) != model.q()) throw DomainError("tau arguments: xi has the wrong size", t);
  const PsiMap map = make_map(model, model.tau_atoms(), model.tau_rule(), t);
  const ArgLayout& lay = model.tau_layout();
  Vector args(static_cast<Eigen::Index>(lay.arity()));
  if (lay.psi > 0) args.head(static_cast<Eigen::Index>(lay.psi)) = map.gather(seg);
  if (lay.param > 0) args.tail(static_cast<Eigen::Index>(lay.param)) = xi;
  return args;
}

Vector eval_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u, const Vector& theta) {
  Vector out = model.f_core().eval(t, f_arguments(model, t, seg, u, theta));
  check_finite(out, t, "f");
  return out;
}

double eval_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi) {
  const Vector v = model.tau_core().eval(t, tau_arguments(model, t, seg, xi));
  check_finite(v, t, "tau");
  const double tau = v[0];
  if (!(tau >= 0.0 && tau <= model.r())) {
    std::ostringstream msg;
    msg << "delay " << tau << " outside [0, " << model.r() << "] at t = " << t;
    throw DomainError(msg.str(), t);
  }
  return tau;
}

namespace {

PhiPart split_phi(const PsiMap& map, const Matrix& jac) {
  PhiPart part;
  part.map = map;
  const auto nn = static_cast<Eigen::Index>(map.n);
  for (std::size_t j = 0; j < map.lags.size(); ++j) {
    part.point_terms.emplace_back(map.lags[j], jac.middleCols(static_cast<Eigen::Index>(j) * nn, nn));
  }
  if (map.kernel) {
    part.kernel_coeff = jac.middleCols(static_cast<Eigen::Index>(map.lags.size()) * nn,
                                       static_cast<Eigen::Index>(map.kernel->rows));
  } else {
    part.kernel_coeff = Matrix(jac.rows(), 0);
  }
  return part;
}

FirstDerivative first_derivative(const PsiMap& map, const ArgLayout& lay, const Matrix& jac, double t) {
  if (!jac.allFinite()) {
    std::ostringstream msg;
    msg << "core gradient is not finite at t = " << t;
    throw NumericError(msg.str());
  }
  FirstDerivative d;
  d.phi = split_phi(map, jac.leftCols(static_cast<Eigen::Index>(lay.psi)));
  d.state = jac.middleCols(static_cast<Eigen::Index>(lay.state_offset()), static_cast<Eigen::Index>(lay.state));
  d.param = jac.rightCols(static_cast<Eigen::Index>(lay.param));
  return d;
}

}  // namespace

FirstDerivative d_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u, const Vector& theta) {
  const Vector args = f_arguments(model, t, seg, u, theta);
  const PsiMap map = make_map(model, model.f_atoms(), model.f_rule(), t);
  return first_derivative(map, model.f_layout(), model.f_core().grad(t, args), t);
}

FirstDerivative d_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi) {
  const Vector args = tau_arguments(model, t, seg, xi);
  const PsiMap map = make_map(model, model.tau_atoms(), model.tau_rule(), t);
  return first_derivative(map, model.tau_layout(), model.tau_core().grad(t, args), t);
}

BilinearTable d2_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u, const Vector& theta) {
  const Vector args = f_arguments(model, t, seg, u, theta);
  BilinearTable table{make_map(model, model.f_atoms(), model.f_rule(), t), model.f_layout(),
                      model.f_core().hess(t, args)};
  for (const auto& h : table.hess) check_finite(h.reshaped(), t, "f hessian");
  return table;
}

BilinearTable d2_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi) {
  const Vector args = tau_arguments(model, t, seg, xi);
  BilinearTable table{make_map(model, model.tau_atoms(), model.tau_rule(), t), model.tau_layout(),
                      model.tau_core().hess(t, args)};
  for (const auto& h : table.hess) check_finite(h.reshaped(), t, "tau hessian");
  return table;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

struct CheckAccumulator {
  ValidationCheck check;
  void observe(double mismatch, double ref) {
    check.max_mismatch = std::max(check.max_mismatch, mismatch);
    check.scale = std::max(check.scale, ref);
  }
};

void validate_core(const SmoothCore& core, const std::string& prefix, int probes, double radius, double horizon,
                   std::mt19937_64& rng, std::vector<ValidationCheck>& out) {
  std::uniform_real_distribution<double> arg_dist(-radius, radius);
  std::uniform_real_distribution<double> t_dist(0.0, horizon);
  CheckAccumulator grad{{prefix + ".grad"}}, hess{{prefix + ".hess"}}, sym{{prefix + ".hess_symmetry"}},
      dt{{prefix + ".time_partial"}};
  const auto arity = static_cast<Eigen::Index>(core.arity);
  for (int k = 0; k < probes; ++k) {
    const double t = t_dist(rng);
    Vector x(arity);
    for (Eigen::Index i = 0; i < arity; ++i) x[i] = arg_dist(rng);
    const Matrix g = core.grad(t, x);
    const auto h = core.hess(t, x);
    for (Eigen::Index i = 0; i < arity; ++i) {
      const double eps = 1e-6 * std::max(1.0, std::abs(x[i]));
      Vector xp = x, xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      const Vector fd = (core.eval(t, xp) - core.eval(t, xm)) / (2.0 * eps);
      const Matrix fd_grad = (core.grad(t, xp) - core.grad(t, xm)) / (2.0 * eps);
      for (Eigen::Index o = 0; o < g.rows(); ++o) {
        grad.observe(std::abs(g(o, i) - fd[o]), std::abs(fd[o]));
        for (Eigen::Index j = 0; j < arity; ++j) {
          const double supplied = h[static_cast<std::size_t>(o)](j, i);
          hess.observe(std::abs(supplied - fd_grad(o, j)), std::abs(fd_grad(o, j)));
          sym.observe(std::abs(supplied - h[static_cast<std::size_t>(o)](i, j)), std::abs(supplied));
        }
      }
    }
    if (core.time_partial) {
      const double eps = 1e-6 * std::max(1.0, std::abs(t));
      const Vector fd = (core.eval(t + eps, x) - core.eval(t - eps, x)) / (2.0 * eps);
      const Vector sup = core.time_partial(t, x);
      for (Eigen::Index o = 0; o < fd.size(); ++o) dt.observe(std::abs(sup[o] - fd[o]), std::abs(fd[o]));
    }
  }
  out.push_back(grad.check);
  out.push_back(hess.check);
  out.push_back(sym.check);
  if (core.time_partial) out.push_back(dt.check);
}

void validate_atoms(const DelayAtomSet& atoms, const std::string& prefix, const ModelSpec& model, int probes,
                    std::vector<ValidationCheck>& out) {
  CheckAccumulator range{{prefix + ".lag_range"}}, rate{{prefix + ".lag_rate"}}, kdt{{prefix + ".kernel_time_partial"}};
  for (int k = 0; k <= probes; ++k) {
    const double t = model.horizon() * static_cast<double>(k) / std::max(1, probes);
    for (const auto& lag : atoms.point_lags) {
      const double v = lag.value(t);
      const double violation = std::max({0.0, -v, v - model.r()});
      range.observe(violation, std::abs(v));
      const double eps = 1e-6 * std::max(1.0, std::abs(t));
      const double fd = (lag.value(t + eps) - lag.value(t - eps)) / (2.0 * eps);
      rate.observe(std::abs(lag.rate(t) - fd), std::abs(fd));
    }
    if (atoms.kernel) {
      const double eps = 1e-6 * std::max(1.0, std::abs(t));
      for (double z : {-model.r(), -0.5 * model.r(), 0.0}) {
        const Matrix fd = (atoms.kernel->value(t + eps, z) - atoms.kernel->value(t - eps, z)) / (2.0 * eps);
        const Matrix sup = atoms.kernel->time_partial(t, z);
        kdt.observe((sup - fd).cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff());
      }
    }
  }
  if (!atoms.point_lags.empty()) {
    // Range violations are absolute, never scaled.
    range.check.scale = 0.0;
    out.push_back(range.check);
    out.push_back(rate.check);
  }
  if (atoms.kernel) out.push_back(kdt.check);
}

}  // namespace

ValidationReport validate_model(const ModelSpec& model, int probes, double tol, double radius, unsigned seed) {
  ValidationReport report;
  std::mt19937_64 rng(seed);
  validate_core(model.f_core(), "f", probes, radius, model.horizon(), rng, report.checks);
  validate_core(model.tau_core(), "tau", probes, radius, model.horizon(), rng, report.checks);
  validate_atoms(model.f_atoms(), "f", model, probes, report.checks);
  validate_atoms(model.tau_atoms(), "tau", model, probes, report.checks);
  for (auto& c : report.checks) {
    const bool is_range = c.name.ends_with(".lag_range");
    c.passed = is_range ? c.max_mismatch == 0.0 : c.max_mismatch <= tol * std::max(1.0, c.scale);
    report.passed = report.passed && c.passed;
  }
  return report;
}

}  // namespace sdde
