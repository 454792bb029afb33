#include "sdde/lag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "sdde/errors.hpp"

namespace sdde {

double lag_value(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t) {
  return t - eval_tau(model, t, Segment(x, t, model.r()), gamma.xi);
}

SideChoice approach_side(const Trajectory& traj, double point, double rate, Side time_side, double tol,
                         double rate_floor) {
  SideChoice c;
  c.point = point;
  const std::size_t k = traj.knot_near(point, tol * std::max(1.0, std::abs(point)));
  if (k == Trajectory::npos) return c;
  c.at_knot = true;
  c.point = traj.knots()[k];
  if (std::abs(rate) <= rate_floor) {
    c.tie = true;
    c.side = Side::Right;
    return c;
  }
  const Side forward = rate > 0.0 ? Side::Right : Side::Left;
  c.side = time_side == Side::Right ? forward : opposite(forward);
  return c;
}

double lag_rate(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t, Side time_side) {
  const Segment seg(x, t, model.r());
  const FirstDerivative d = d_tau(model, t, seg, gamma.xi);
  double dtau = 0.0;
  const SmoothCore& core = model.tau_core();
  if (core.time_partial) dtau += core.time_partial(t, tau_arguments(model, t, seg, gamma.xi))[0];
  const auto& lags = model.tau_atoms().point_lags;
  for (std::size_t i = 0; i < d.phi.point_terms.size(); ++i) {
    const auto& [lag, m] = d.phi.point_terms[i];
    const double move = 1.0 - lags[i].rate(t);
    if (move == 0.0) continue;
    const double p = t - lag;
    const SideChoice side = approach_side(x, p, move, time_side);
    dtau += (m * x.eval_d1(side.point, side.side))[0] * move;
  }
  if (model.tau_atoms().kernel && d.phi.kernel_coeff.size() > 0) {
    dtau += (d.phi.kernel_coeff * kernel_time_derivative(*model.tau_atoms().kernel, model.tau_rule(), t, seg))[0];
  }
  return 1.0 - dtau;
}

LagProfile lag_profile(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, std::size_t cells,
                       double t_end) {
  if (cells < 1) throw DomainError("lag_profile: need at least one cell");
  const double end = t_end > 0.0 ? t_end : x.end();
  if (end > x.end() * (1.0 + 1e-14) + 1e-14) throw DomainError("lag_profile: t_end beyond the trajectory", end);
  LagProfile p;
  p.cells = cells;
  p.grid.resize(cells + 1);
  p.u.resize(cells + 1);
  p.u_dot.resize(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) {
    const double t = i == cells ? end : end * static_cast<double>(i) / static_cast<double>(cells);
    p.grid[i] = t;
    p.u[i] = lag_value(model, gamma, x, t);
    p.u_dot[i] = lag_rate(model, gamma, x, t, i == cells ? Side::Left : Side::Right);
  }
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = p.u[i], b = p.u[i + 1];
    if (a == 0.0) {
      p.zeros.push_back(p.grid[i]);
      continue;
    }
    if ((a < 0.0) == (b < 0.0) || b == 0.0) continue;
    auto g = [&](double t) { return lag_value(model, gamma, x, t); };
    boost::uintmax_t iters = 200;
    const auto br = boost::math::tools::toms748_solve(g, p.grid[i], p.grid[i + 1], a, b,
                                                      boost::math::tools::eps_tolerance<double>(50), iters);
    p.zeros.push_back(0.5 * (br.first + br.second));
  }
  if (p.u.back() == 0.0) p.zeros.push_back(p.grid.back());
  return p;
}

PMReport classify_pm(const LagProfile& profile, double slope_floor, double shrink_cells) {
  const std::size_t n = profile.grid.size();
  if (n < 2) throw DomainError("classify_pm: profile has fewer than two samples");
  PMReport rep;
  rep.slope_floor = slope_floor;
  rep.cells = profile.cells;
  const double cell = (profile.grid.back() - profile.grid.front()) / static_cast<double>(n - 1);

  auto sign = [&](double v) { return std::abs(v) < slope_floor ? 0 : (v > 0.0 ? 1 : -1); };

  // Sign changes between consecutive nonzero samples; the change point is placed by linear interpolation
  // across a direct change, or at the middle of a run of zero samples.
  std::vector<double> changes;
  std::vector<std::size_t> change_index;
  int last_sign = 0;
  std::size_t last_index = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = sign(profile.u_dot[i]);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      double tc;
      if (i == last_index + 1) {
        const double a = profile.u_dot[last_index], b = profile.u_dot[i];
        tc = profile.grid[last_index] + (profile.grid[i] - profile.grid[last_index]) * a / (a - b);
      } else {
        tc = 0.5 * (profile.grid[last_index + 1] + profile.grid[i - 1]);
      }
      if (!change_index.empty() && i - change_index.back() <= 2) {
        std::ostringstream msg;
        msg << "monotonicity changes near t = " << changes.back() << " and t = " << tc
            << " are within two grid cells; refine the grid";
        throw ResolutionError(msg.str());
      }
      changes.push_back(tc);
      change_index.push_back(i);
    }
    last_sign = s;
    last_index = i;
  }
  rep.sign_changes = changes.size();
  rep.mesh.push_back(profile.grid.front());
  rep.mesh.insert(rep.mesh.end(), changes.begin(), changes.end());
  rep.mesh.push_back(profile.grid.back());

  const double shrink = shrink_cells * cell;
  rep.is_pm = true;
  for (std::size_t k = 0; k + 1 < rep.mesh.size(); ++k) {
    const double a = rep.mesh[k], b = rep.mesh[k + 1];
    double lo = a + shrink, hi = b - shrink;
    if (k == 0) lo = a;
    if (k + 2 == rep.mesh.size()) hi = b;
    double min_slope = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = profile.grid[i];
      if (t < lo - 1e-12 * cell || t > hi + 1e-12 * cell) continue;
      min_slope = std::min(min_slope, std::abs(profile.u_dot[i]));
      sum += profile.u_dot[i];
    }
    if (!std::isfinite(min_slope)) {
      // Piece shorter than the shrink margin: use the sample nearest its middle.
      const double mid = 0.5 * (a + b);
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(profile.grid[i] - mid) < std::abs(profile.grid[best] - mid)) best = i;
      }
      min_slope = std::abs(profile.u_dot[best]);
      sum = profile.u_dot[best];
    }
    rep.increasing.push_back(sum > 0.0);
    rep.min_abs_slope.push_back(min_slope);
    if (min_slope < slope_floor) rep.is_pm = false;
  }
  const double global_min = *std::min_element(profile.u_dot.begin(), profile.u_dot.end());
  rep.is_p1 = rep.is_pm && rep.pieces() == 1 && rep.increasing.front() && global_min >= slope_floor;
  return rep;
}

PMReport check_pm(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, std::size_t cells,
                  double slope_floor) {
  const double end = std::min(model.r(), x.end());
  return classify_pm(lag_profile(model, gamma, x, cells, end), slope_floor);
}

}  // namespace sdde
