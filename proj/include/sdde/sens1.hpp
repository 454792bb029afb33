#pragma once

#include <vector>

#include "sdde/lag.hpp"
#include "sdde/model.hpp"
#include "sdde/solver.hpp"
#include "sdde/trajectory.hpp"

namespace sdde {

/// A direction as seen by the operators at one time: the history slot is a segment view.
struct DirectionView {
  Segment seg;
  const Vector& theta;
  const Vector& xi;
};

/**
 * @brief Everything the linearized operators need at time t along x.
 *
 * The lag rate is only evaluated when a one-sided derivative at u(t) actually needs a side.
 */
class LinearizationPoint {
 public:
  LinearizationPoint(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double t,
                     Side time_side = Side::Right);

  [[nodiscard]] double t() const noexcept { return t_; }
  [[nodiscard]] double tau() const noexcept { return tau_; }
  [[nodiscard]] double u() const noexcept { return u_; }
  [[nodiscard]] Side time_side() const noexcept { return time_side_; }
  [[nodiscard]] const FirstDerivative& df() const noexcept { return df_; }
  [[nodiscard]] const FirstDerivative& dtau() const noexcept { return dtau_; }
  [[nodiscard]] const Vector& xdot_u() const noexcept { return xdot_u_; }

  /// du/dt at t (chain rule), cached.
  [[nodiscard]] double rate() const;
  /// Where and from which side to read a derivative of traj at u(t); sets the tie flag when needed.
  [[nodiscard]] SideChoice side_at_u(const Trajectory& traj) const;
  [[nodiscard]] bool tie() const noexcept { return tie_; }

  [[nodiscard]] const ModelSpec& model() const noexcept { return *model_; }
  [[nodiscard]] const Parameter& gamma() const noexcept { return *gamma_; }
  [[nodiscard]] const Trajectory& x() const noexcept { return *x_; }
  [[nodiscard]] Segment x_segment() const { return Segment(*x_, t_, model_->r()); }

  /// A(t, h^phi, h^xi) = D2 tau h^phi + D3 tau h^xi.
  [[nodiscard]] double A(const DirectionView& h) const;
  /// E(t, h^phi, h^xi) = -x'(u) A + h^phi(-tau).
  [[nodiscard]] Vector E(const DirectionView& h) const;
  /// L(t, x)(h) = D2 f h^phi + D3 f E + D4 f h^theta.
  [[nodiscard]] Vector L(const DirectionView& h) const;

 private:
  const ModelSpec* model_;
  const Parameter* gamma_;
  const Trajectory* x_;
  double t_, tau_, u_;
  Side time_side_;
  FirstDerivative df_, dtau_;
  Vector xdot_u_;
  mutable double rate_ = 0.0;
  mutable bool have_rate_ = false;
  mutable bool tie_ = false;
};

/// L(t, x)(h^phi, h^theta, h^xi) with h^phi given as a function on [-r, 0].
[[nodiscard]] Vector apply_L(double t, const Trajectory& x, const ModelSpec& model, const Parameter& gamma,
                             const Trajectory& h_phi, const Vector& h_theta, const Vector& h_xi,
                             Side time_side = Side::Right);

struct FirstVariation {
  Trajectory z;  ///< on [-r, alpha]; equals h^phi on [-r, 0]
  Direction direction;
  std::vector<Breakpoint> breakpoints;
  double sup_norm = 0.0;
  int crossings = 0;
  bool hypothesis_unverified = false;  ///< the lag could not be shown piecewise monotone
  bool tie = false;                    ///< a one-sided derivative was needed with zero approach rate
};

struct SensOptions {
  bool verify_pm = true;
  std::size_t pm_cells = 2000;
};

[[nodiscard]] FirstVariation solve_first_variation(const ModelSpec& model, const Parameter& gamma,
                                                   const Solution& sol, const Direction& h, const SolveConfig& cfg,
                                                   const SensOptions& opts = {});

/// Unit directions in theta then xi, zero elsewhere.
[[nodiscard]] std::vector<Direction> canonical_directions(const ModelSpec& model, const Parameter& gamma);

/// First variations along the canonical theta/xi directions followed by phi_basis. Solved concurrently.
[[nodiscard]] std::vector<FirstVariation> sensitivity_matrix(const ModelSpec& model, const Parameter& gamma,
                                                             const Solution& sol,
                                                             const std::vector<Direction>& phi_basis,
                                                             const SolveConfig& cfg, const SensOptions& opts = {});

/// First variations along arbitrary directions, solved concurrently, in order.
[[nodiscard]] std::vector<FirstVariation> first_variations(const ModelSpec& model, const Parameter& gamma,
                                                           const Solution& sol, const std::vector<Direction>& dirs,
                                                           const SolveConfig& cfg, const SensOptions& opts = {});

}  // namespace sdde
