#pragma once

#include <vector>

#include "sdde/sens1.hpp"

namespace sdde {

/**
 * @brief The linear forms A, E, F and bilinear forms G, H, B at one time s along x.
 *
 * Directions are passed as DirectionView; for the history slot the segment's own curve
 * supplies the one-sided derivative h^phi'(-tau).
 */
class OperatorBundle {
 public:
  OperatorBundle(const ModelSpec& model, const Parameter& gamma, const Trajectory& x, double s,
                 Side time_side = Side::Right);

  [[nodiscard]] const LinearizationPoint& lin() const noexcept { return lin_; }
  [[nodiscard]] const Vector& xddot_u() const noexcept { return xddot_u_; }

  [[nodiscard]] double A(const DirectionView& h) const { return lin_.A(h); }
  [[nodiscard]] Vector E(const DirectionView& h) const { return lin_.E(h); }
  [[nodiscard]] Vector L(const DirectionView& h) const { return lin_.L(h); }
  /// F = -x''(u) A + h^phi'(-tau).
  [[nodiscard]] Vector F(const DirectionView& h) const;
  [[nodiscard]] double G(const DirectionView& h, const DirectionView& y) const;
  [[nodiscard]] Vector H(const DirectionView& h, const DirectionView& y) const;
  [[nodiscard]] Vector B(const DirectionView& h, const DirectionView& y) const;

  /// h^phi'(-tau) read one-sidedly from the segment's curve.
  [[nodiscard]] Vector history_slope(const DirectionView& h) const;
  [[nodiscard]] bool tie() const noexcept { return lin_.tie(); }

 private:
  LinearizationPoint lin_;
  BilinearTable d2f_, d2tau_;
  Vector xddot_u_;
};

/// Checks compatibility first; HypothesisError if gamma is incompatible.
[[nodiscard]] OperatorBundle assemble_operators(double s, const Trajectory& x, const ModelSpec& model,
                                                const Parameter& gamma, double compat_tol = 1e-8,
                                                Side time_side = Side::Right);

struct SecondVariation {
  Trajectory w;  ///< on [-r, alpha], zero on [-r, 0]
  Direction h, y;
  std::vector<Breakpoint> breakpoints;
  bool compatible = true;
  bool is_pm = true;
  bool phi_w2inf = true;  ///< phi is piecewise cubic, so always true here
  bool hypothesis_unverified = false;
  bool tie = false;
  int crossings = 0;
};

/// zh / zy may be null, in which case they are solved here.
[[nodiscard]] SecondVariation solve_second_variation(const ModelSpec& model, const Parameter& gamma,
                                                     const Solution& sol, const Direction& h, const Direction& y,
                                                     const SolveConfig& cfg, const FirstVariation* zh = nullptr,
                                                     const FirstVariation* zy = nullptr,
                                                     const SensOptions& opts = {});

/// Entry (i, j) is the second variation along (basis_i, basis_j); the upper triangle is solved and mirrored.
[[nodiscard]] std::vector<std::vector<SecondVariation>> hessian_tensor(const ModelSpec& model,
                                                                       const Parameter& gamma, const Solution& sol,
                                                                       const std::vector<Direction>& basis,
                                                                       const SolveConfig& cfg,
                                                                       const SensOptions& opts = {});

}  // namespace sdde
