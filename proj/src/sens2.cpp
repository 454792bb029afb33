#include "sdde/sens2.hpp"

#include <algorithm>
#include <atomic>
#include <future>

#include "engine.hpp"
#include "sdde/errors.hpp"
#include "sens_common.hpp"

namespace sdde {

namespace {

constexpr ArgClass kFClasses[] = {ArgClass::Psi, ArgClass::State, ArgClass::Param};
constexpr ArgClass kTauClasses[] = {ArgClass::Psi, ArgClass::Param};

}  // namespace

OperatorBundle::OperatorBundle(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double s,
                               Side time_side)
    : lin_(model, gamma, x, s, time_side) {
  const Segment seg = lin_.x_segment();
  d2f_ = d2_f(model, s, seg, x.eval(lin_.u()), gamma.theta);
  d2tau_ = d2_tau(model, s, seg, gamma.xi);
  const SideChoice c = lin_.side_at_u(x);
  xddot_u_ = x.eval_d2(c.point, c.side);
}

Vector OperatorBundle::history_slope(const DirectionView& h) const {
  const Trajectory& traj = h.seg.trajectory();
  const double p = h.seg.anchor() - lin_.tau();
  if (traj.knot_near(p, 1e-10 * std::max(1.0, std::abs(p))) == Trajectory::npos) {
    return h.seg.d1(-lin_.tau(), Side::Right);
  }
  // The read point moves like u when the segment follows t, like -tau when it is fixed.
  const double rate = h.seg.anchor() == lin_.t() ? lin_.rate() : lin_.rate() - 1.0;
  const SideChoice c = approach_side(traj, p, rate, lin_.time_side());
  return traj.eval_d1(c.point, c.side);
}

Vector OperatorBundle::F(const DirectionView& h) const { return -A(h) * xddot_u_ + history_slope(h); }

double OperatorBundle::G(const DirectionView& h, const DirectionView& y) const {
  auto args = [&](const DirectionView& d, ArgClass c) -> Vector {
    return c == ArgClass::Psi ? d2tau_.gather(d.seg) : d.xi;
  };
  double g = 0.0;
  for (ArgClass i : kTauClasses) {
    const Vector a = args(h, i);
    for (ArgClass j : kTauClasses) g += apply_bilinear(d2tau_, i, j, a, args(y, j))[0];
  }
  return g;
}

Vector OperatorBundle::H(const DirectionView& h, const DirectionView& y) const {
  return -A(h) * F(y) - G(h, y) * lin_.xdot_u() - A(y) * history_slope(h);
}

Vector OperatorBundle::B(const DirectionView& h, const DirectionView& y) const {
  auto args = [&](const DirectionView& d, ArgClass c) -> Vector {
    switch (c) {
      case ArgClass::Psi:
        return d2f_.gather(d.seg);
      case ArgClass::State:
        return E(d);
      case ArgClass::Param:
        return d.theta;
    }
    return {};
  };
  Vector out = lin_.df().state * H(h, y);
  for (ArgClass i : kFClasses) {
    const Vector a = args(h, i);
    for (ArgClass j : kFClasses) out += apply_bilinear(d2f_, i, j, a, args(y, j));
  }
  return out;
}

OperatorBundle assemble_operators(double s, const Trajectory& x, const ModelSpec& model, const Parameter& gamma,
                                  double compat_tol, Side time_side) {
  const CompatReport c = check_compatibility(model, gamma, compat_tol);
  if (!c.compatible) {
    throw HypothesisError("second-order operators need compatible initial data; residual " +
                          std::to_string(c.residual));
  }
  return OperatorBundle(model, gamma, x, s, time_side);
}

namespace {

SecondVariation second_variation(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                                 const FirstVariation& zh, const FirstVariation& zy, const SolveConfig& cfg,
                                 bool unverified) {
  const double r = model.r();
  const Direction& h = zh.direction;
  const Direction& y = zy.direction;
  const Vector zero_theta = Vector::Zero(static_cast<Eigen::Index>(model.p()));
  const Vector zero_xi = Vector::Zero(static_cast<Eigen::Index>(model.q()));
  std::atomic<bool> tie{false};
  detail::RhsFn rhs = [&](double t, const Trajectory& w, Side side) -> Vector {
    const OperatorBundle ob(model, gamma, sol.x, t, side);
    const DirectionView hv{Segment(zh.z, t, r), h.theta, h.xi};
    const DirectionView yv{Segment(zy.z, t, r), y.theta, y.xi};
    Vector v = ob.L(DirectionView{Segment(w, t, r), zero_theta, zero_xi}) + ob.B(hv, yv);
    if (ob.tie()) tie = true;
    return v;
  };
  std::vector<Breakpoint> sources = zh.breakpoints;
  for (const auto& b : zy.breakpoints) detail::register_breakpoint(sources, b.time, b.generation, 1e-11);
  std::vector<double> mesh = detail::interior_knots(zh.z, sol.alpha);
  for (double k : detail::interior_knots(zy.z, sol.alpha)) mesh.push_back(k);
  std::sort(mesh.begin(), mesh.end());
  std::vector<double> merged;
  for (double k : mesh) {
    if (merged.empty() || k - merged.back() > 1e-11) merged.push_back(k);
  }
  const Trajectory init = Trajectory::constant(-r, 0.0, Vector::Zero(static_cast<Eigen::Index>(model.n())));
  auto res = detail::integrate(init, sol.alpha, rhs, detail::along_x_lags(model, gamma, sol.x),
                               detail::engine_settings(cfg), std::move(sources), &merged);
  SecondVariation sv;
  sv.w = std::move(res.y);
  sv.h = h;
  sv.y = y;
  sv.breakpoints = std::move(res.breakpoints);
  sv.crossings = res.crossings;
  sv.hypothesis_unverified = unverified;
  sv.is_pm = !unverified;
  sv.tie = tie || zh.tie || zy.tie;
  return sv;
}

void require_compatible(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg) {
  const CompatReport c = check_compatibility(model, gamma, cfg.compat_tol);
  if (!c.compatible) {
    throw HypothesisError("second variation needs compatible initial data; residual " + std::to_string(c.residual) +
                          " exceeds " + std::to_string(cfg.compat_tol));
  }
}

}  // namespace

SecondVariation solve_second_variation(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                                       const Direction& h, const Direction& y, const SolveConfig& cfg,
                                       const FirstVariation* zh, const FirstVariation* zy, const SensOptions& opts) {
  require_compatible(model, gamma, cfg);
  const bool unverified = detail::pm_unverified(model, gamma, sol, opts);
  FirstVariation own_h, own_y;
  if (!zh) {
    own_h = detail::first_variation(model, gamma, sol, h, cfg, unverified);
    zh = &own_h;
  }
  if (!zy) {
    own_y = detail::first_variation(model, gamma, sol, y, cfg, unverified);
    zy = &own_y;
  }
  return second_variation(model, gamma, sol, *zh, *zy, cfg, unverified);
}

std::vector<std::vector<SecondVariation>> hessian_tensor(const ModelSpec& model, const Parameter& gamma,
                                                         const Solution& sol, const std::vector<Direction>& basis,
                                                         const SolveConfig& cfg, const SensOptions& opts) {
  if (basis.empty()) return {};
  require_compatible(model, gamma, cfg);
  const bool unverified = detail::pm_unverified(model, gamma, sol, opts);
  SensOptions inner = opts;
  inner.verify_pm = false;
  std::vector<FirstVariation> z = first_variations(model, gamma, sol, basis, cfg, inner);
  for (auto& zi : z) zi.hypothesis_unverified = unverified;

  const std::size_t k = basis.size();
  std::vector<std::vector<std::future<SecondVariation>>> jobs(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      jobs[i].push_back(std::async(std::launch::async, [&, i, j] {
        return second_variation(model, gamma, sol, z[i], z[j], cfg, unverified);
      }));
    }
  }
  std::vector<std::vector<SecondVariation>> out(k, std::vector<SecondVariation>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      out[i][j] = jobs[i][j - i].get();
      if (j != i) {
        out[j][i] = out[i][j];
        std::swap(out[j][i].h, out[j][i].y);
      }
    }
  }
  return out;
}

}  // namespace sdde
