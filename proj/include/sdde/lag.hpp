#pragma once

#include <cstddef>
#include <vector>

#include "sdde/model.hpp"
#include "sdde/trajectory.hpp"

namespace sdde {

/// u(t) = t - tau(t, x_t, xi).
[[nodiscard]] double lag_value(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t);

/**
 * du/dt by the chain rule through the atoms of tau. Derivatives of x at the point lags are
 * taken one-sidedly according to time_side and the direction the lag point moves.
 */
[[nodiscard]] double lag_rate(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t,
                              Side time_side = Side::Right);

struct SideChoice {
  double point = 0.0;  ///< where to evaluate: the knot itself when the point is within tolerance of one
  Side side = Side::Right;
  bool at_knot = false;
  bool tie = false;  ///< at a knot with (nearly) zero approach rate; Right was used
};

/**
 * Side for a derivative of traj at a point moving with the given rate, as seen from the
 * time_side of the current time. Only matters when the point sits on a knot of traj.
 */
[[nodiscard]] SideChoice approach_side(const Trajectory& traj, double point, double rate, Side time_side,
                                       double tol = 1e-10, double rate_floor = 1e-12);

struct LagProfile {
  std::vector<double> grid;
  std::vector<double> u;
  std::vector<double> u_dot;
  std::vector<double> zeros;  ///< refined roots of u
  std::size_t cells = 0;
};

/// Samples u and du/dt on cells + 1 uniform points of [0, t_end] (t_end = 0 means the end of x).
[[nodiscard]] LagProfile lag_profile(const ModelSpec& model, const Parameter& gamma, const Trajectory& x,
                                     std::size_t cells, double t_end = 0.0);

struct PMReport {
  std::vector<double> mesh;              ///< 0 = t_0 < ... < t_m = end
  std::vector<bool> increasing;          ///< per piece
  std::vector<double> min_abs_slope;     ///< per piece, over the shrunk sub-interval
  std::size_t sign_changes = 0;
  bool is_pm = false;
  bool is_p1 = false;
  double slope_floor = 0.0;
  std::size_t cells = 0;                 ///< grid resolution the report is valid for
  [[nodiscard]] std::size_t pieces() const { return increasing.size(); }
};

/**
 * Piecewise strict monotonicity of u on the profile grid. shrink_cells grid cells are cut from
 * both ends of every piece before the minimum slope is taken.
 */
[[nodiscard]] PMReport classify_pm(const LagProfile& profile, double slope_floor = 1e-8, double shrink_cells = 2.0);

/// Profile on [0, min(r, alpha)] followed by classify_pm; ResolutionError propagates.
[[nodiscard]] PMReport check_pm(const ModelSpec& model, const Parameter& gamma, const Trajectory& x,
                                std::size_t cells = 2000, double slope_floor = 1e-8);

}  // namespace sdde
