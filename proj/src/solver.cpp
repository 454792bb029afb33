#include "sdde/solver.hpp"

#include <cmath>
#include <sstream>

#include "engine.hpp"
#include "sdde/errors.hpp"

namespace sdde {

double resolve_alpha(const ModelSpec& model, const SolveConfig& cfg) {
  return cfg.max_alpha > 0.0 ? cfg.max_alpha : model.horizon();
}

void check_inputs(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg) {
  if (!(cfg.step > 0.0)) throw DomainError("solve: step must be positive");
  if (!(cfg.tau_min > 0.0)) throw DomainError("solve: tau_min must be positive");
  if (cfg.max_alpha < 0.0 || cfg.max_alpha > model.horizon() * (1.0 + 1e-12)) {
    throw DomainError("solve: max_alpha must lie in [0, T]");
  }
  if (cfg.max_iterations < 1) throw DomainError("solve: max_iterations must be >= 1");
  if (gamma.phi.pieces() == 0 || gamma.phi.dim() != model.n()) {
    throw DomainError("solve: phi must be a curve of dimension n");
  }
  const double tol = 1e-12 * std::max(1.0, model.r());
  if (std::abs(gamma.phi.start() + model.r()) > tol || std::abs(gamma.phi.end()) > tol) {
    throw DomainError("solve: phi must be defined exactly on [-r, 0]");
  }
  if (static_cast<std::size_t>(gamma.theta.size()) != model.p()) throw DomainError("solve: theta has the wrong size");
  if (static_cast<std::size_t>(gamma.xi.size()) != model.q()) throw DomainError("solve: xi has the wrong size");
}

namespace {

void point_lag_times(const DelayAtomSet& atoms, double t, std::vector<double>& out) {
  for (const auto& lag : atoms.point_lags) out.push_back(t - lag.value(t));
}

}  // namespace

Solution solve_tracked(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg) {
  check_inputs(model, gamma, cfg);
  const double alpha = resolve_alpha(model, cfg);
  const double r = model.r();

  auto delay = [&](double t, const Segment& seg) {
    const double tau = eval_tau(model, t, seg, gamma.xi);
    if (tau < cfg.tau_min) {
      std::ostringstream msg;
      msg << "delay " << tau << " below tau_min = " << cfg.tau_min << " at t = " << t;
      throw VanishingDelayError(msg.str(), t);
    }
    return tau;
  };
  detail::RhsFn rhs = [&](double t, const Trajectory& y, Side) -> Vector {
    const Segment seg(y, t, r);
    const double tau = delay(t, seg);
    return eval_f(model, t, seg, seg(-tau), gamma.theta);
  };
  detail::LagFn lags = [&](double t, const Trajectory& y, std::vector<double>& out) {
    out.clear();
    out.push_back(t - delay(t, Segment(y, t, r)));
    point_lag_times(model.f_atoms(), t, out);
    point_lag_times(model.tau_atoms(), t, out);
  };

  detail::EngineSettings es;
  es.step = cfg.step;
  es.tol = cfg.tol;
  es.max_iterations = cfg.max_iterations;
  es.depth = cfg.discontinuity_depth;

  auto res = detail::integrate(gamma.phi, alpha, rhs, lags, es, detail::initial_breakpoints(gamma.phi));
  Solution sol;
  sol.x = std::move(res.y);
  sol.breakpoints = std::move(res.breakpoints);
  sol.alpha = alpha;
  sol.crossings = res.crossings;
  return sol;
}

Trajectory solve(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg) {
  return solve_tracked(model, gamma, cfg).x;
}

CompatReport check_compatibility(const ModelSpec& model, const Parameter& gamma, double tol) {
  CompatReport rep;
  rep.tol = tol;
  const Segment seg(gamma.phi, 0.0, model.r());
  rep.lhs = gamma.phi.eval_d1(0.0, Side::Left);
  const double tau = eval_tau(model, 0.0, seg, gamma.xi);
  rep.rhs = eval_f(model, 0.0, seg, seg(-tau), gamma.theta);
  rep.residual = (rep.lhs - rep.rhs).cwiseAbs().maxCoeff();
  rep.compatible = rep.residual <= tol;
  return rep;
}

double lipschitz_probe(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg,
                       const std::vector<Direction>& directions, double eps) {
  if (!(eps > 0.0)) throw DomainError("lipschitz_probe: eps must be positive");
  const Trajectory x0 = solve(model, gamma, cfg);
  double best = 0.0;
  for (const auto& d : directions) {
    const double dn = gamma_norm(d);
    if (dn == 0.0) continue;
    const Trajectory x1 = solve(model, add(gamma, combine(eps, d, 0.0, d)), cfg);
    best = std::max(best, norm_w1inf(linear_combination(1.0, x1, -1.0, x0)) / (eps * dn));
  }
  return best;
}

}  // namespace sdde
