#include "sdde/sens1.hpp"

#include <atomic>
#include <future>

#include "engine.hpp"
#include "sdde/errors.hpp"
#include "sens_common.hpp"

namespace sdde {

LinearizationPoint::LinearizationPoint(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t,
                                       Side time_side)
    : model_(&model), gamma_(&gamma), x_(&x), t_(t), time_side_(time_side) {
  const Segment seg(x, t, model.r());
  tau_ = eval_tau(model, t, seg, gamma.xi);
  u_ = t - tau_;
  if (u_ < x.start() || u_ > x.end()) throw DomainError("lag time outside the trajectory", t);
  const Vector xu = x.eval(u_);
  df_ = d_f(model, t, seg, xu, gamma.theta);
  dtau_ = d_tau(model, t, seg, gamma.xi);
  const SideChoice c = side_at_u(x);
  xdot_u_ = x.eval_d1(c.point, c.side);
}

double LinearizationPoint::rate() const {
  if (!have_rate_) {
    rate_ = lag_rate(*model_, *gamma_, *x_, t_, time_side_);
    have_rate_ = true;
  }
  return rate_;
}

SideChoice LinearizationPoint::side_at_u(const Trajectory& traj) const {
  const double tol = 1e-10 * std::max(1.0, std::abs(u_));
  if (traj.knot_near(u_, tol) == Trajectory::npos) return SideChoice{u_, Side::Right, false, false};
  const SideChoice c = approach_side(traj, u_, rate(), time_side_);
  if (c.tie) tie_ = true;
  return c;
}

double LinearizationPoint::A(const DirectionView& h) const {
  double a = apply_phi_part(dtau_.phi, h.seg)[0];
  if (h.xi.size() > 0) a += (dtau_.param * h.xi)[0];
  return a;
}

Vector LinearizationPoint::E(const DirectionView& h) const { return -A(h) * xdot_u_ + h.seg(-tau_); }

Vector LinearizationPoint::L(const DirectionView& h) const {
  Vector out = df_.state * E(h);
  if (!df_.phi.point_terms.empty() || df_.phi.kernel_coeff.size() > 0) out += apply_phi_part(df_.phi, h.seg);
  if (h.theta.size() > 0) out += df_.param * h.theta;
  return out;
}

Vector apply_L(double t, const Trajectory& x, const ModelSpec& model, const Parameter& gamma, const Trajectory& h_phi,
               const Vector& h_theta, const Vector& h_xi, Side time_side) {
  const LinearizationPoint lp(model, gamma, x, t, time_side);
  return lp.L(DirectionView{Segment(h_phi, 0.0, model.r()), h_theta, h_xi});
}

namespace detail {

void check_direction(const ModelSpec& model, const Direction& h) {
  if (h.phi.pieces() == 0 || h.phi.dim() != model.n()) throw DomainError("direction: phi must have dimension n");
  const double tol = 1e-12 * std::max(1.0, model.r());
  if (std::abs(h.phi.start() + model.r()) > tol || std::abs(h.phi.end()) > tol) {
    throw DomainError("direction: phi must be defined exactly on [-r, 0]");
  }
  if (static_cast<std::size_t>(h.theta.size()) != model.p()) throw DomainError("direction: theta has the wrong size");
  if (static_cast<std::size_t>(h.xi.size()) != model.q()) throw DomainError("direction: xi has the wrong size");
}

EngineSettings engine_settings(const SolveConfig& cfg) {
  EngineSettings es;
  es.step = cfg.step;
  es.tol = cfg.tol;
  es.max_iterations = cfg.max_iterations;
  es.depth = cfg.discontinuity_depth;
  return es;
}

LagFn along_x_lags(const ModelSpec& model, const Parameter& gamma, const Trajectory& x) {
  return [&model, &gamma, &x](double t, const Trajectory&, std::vector<double>& out) {
    out.clear();
    out.push_back(lag_value(model, gamma, x, t));
    for (const auto& lag : model.f_atoms().point_lags) out.push_back(t - lag.value(t));
    for (const auto& lag : model.tau_atoms().point_lags) out.push_back(t - lag.value(t));
  };
}

std::vector<double> interior_knots(const Trajectory& traj, double alpha) {
  std::vector<double> mesh;
  for (double k : traj.knots()) {
    if (k > 0.0 && k <= alpha) mesh.push_back(k);
  }
  return mesh;
}

bool pm_unverified(const ModelSpec& model, const Parameter& gamma, const Solution& sol, const SensOptions& opts) {
  if (!opts.verify_pm) return false;
  try {
    return !check_pm(model, gamma, sol.x, opts.pm_cells).is_pm;
  } catch (const ResolutionError&) {
    return true;
  }
}

FirstVariation first_variation(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                               const Direction& h, const SolveConfig& cfg, bool unverified) {
  check_direction(model, h);
  const double r = model.r();
  std::atomic<bool> tie{false};
  RhsFn rhs = [&](double t, const Trajectory& z, Side side) -> Vector {
    const LinearizationPoint lp(model, gamma, sol.x, t, side);
    Vector v = lp.L(DirectionView{Segment(z, t, r), h.theta, h.xi});
    if (lp.tie()) tie = true;
    return v;
  };
  std::vector<Breakpoint> sources = initial_breakpoints(h.phi);
  for (const auto& b : sol.breakpoints) register_breakpoint(sources, b.time, b.generation, 1e-11);
  const std::vector<double> mesh = interior_knots(sol.x, sol.alpha);
  auto res = integrate(h.phi, sol.alpha, rhs, along_x_lags(model, gamma, sol.x), engine_settings(cfg),
                       std::move(sources), &mesh);
  FirstVariation fv;
  fv.z = std::move(res.y);
  fv.direction = h;
  fv.breakpoints = std::move(res.breakpoints);
  fv.crossings = res.crossings;
  fv.sup_norm = sup_norm(fv.z);
  fv.hypothesis_unverified = unverified;
  fv.tie = tie;
  return fv;
}

}  // namespace detail

FirstVariation solve_first_variation(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                                     const Direction& h, const SolveConfig& cfg, const SensOptions& opts) {
  return detail::first_variation(model, gamma, sol, h, cfg, detail::pm_unverified(model, gamma, sol, opts));
}

std::vector<Direction> canonical_directions(const ModelSpec& model, const Parameter& gamma) {
  std::vector<Direction> out;
  const Direction zero = zero_direction(gamma);
  for (std::size_t i = 0; i < model.p(); ++i) {
    Direction d = zero;
    d.theta[static_cast<Eigen::Index>(i)] = 1.0;
    out.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < model.q(); ++i) {
    Direction d = zero;
    d.xi[static_cast<Eigen::Index>(i)] = 1.0;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<FirstVariation> first_variations(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                                             const std::vector<Direction>& dirs, const SolveConfig& cfg,
                                             const SensOptions& opts) {
  if (dirs.empty()) return {};
  const bool unverified = detail::pm_unverified(model, gamma, sol, opts);
  std::vector<std::future<FirstVariation>> jobs;
  jobs.reserve(dirs.size());
  for (const auto& d : dirs) {
    jobs.push_back(std::async(std::launch::async, [&, unverified] {
      return detail::first_variation(model, gamma, sol, d, cfg, unverified);
    }));
  }
  std::vector<FirstVariation> out;
  out.reserve(dirs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<FirstVariation> sensitivity_matrix(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                                               const std::vector<Direction>& phi_basis, const SolveConfig& cfg,
                                               const SensOptions& opts) {
  std::vector<Direction> dirs = canonical_directions(model, gamma);
  dirs.insert(dirs.end(), phi_basis.begin(), phi_basis.end());
  return first_variations(model, gamma, sol, dirs, cfg, opts);
}

}  // namespace sdde
