#pragma once

#include <cstddef>
#include <vector>

#include "sdde/model.hpp"
#include "sdde/sens1.hpp"
#include "sdde/solver.hpp"

namespace sdde {

struct Observation {
  double t = 0.0;
  Vector value;
  double weight = 1.0;
};

struct ObservationSet {
  std::vector<Observation> samples;
};

/**
 * @brief Free coordinates of the fit.
 *
 * phi coefficients index the Hermite data of phi: 2 * (k * n + c) is the value of component c
 * at knot k, and 2 * (k * n + c) + 1 its slope.
 */
struct FitMask {
  std::vector<std::size_t> theta;
  std::vector<std::size_t> xi;
  std::vector<std::size_t> phi;

  [[nodiscard]] std::size_t size() const { return theta.size() + xi.size() + phi.size(); }
  [[nodiscard]] static FitMask all_theta(const ModelSpec& model);
  [[nodiscard]] static FitMask all_parameters(const ModelSpec& model);
};

struct FitOptions {
  int max_iterations = 20;
  int max_halvings = 20;
  double step_tol = 1e-12;   ///< stop when |delta| <= step_tol * (1 + |free coordinates|)
  double cost_tol = 1e-30;   ///< stop when the cost drops below this
  double rank_tol = 1e-10;   ///< relative singular value floor
  SolveConfig solve;
};

struct FitResult {
  Parameter gamma;
  std::vector<double> history;  ///< cost of the initial point, then of every accepted iterate
  int iterations = 0;
  bool converged = false;
  std::vector<double> singular_values;  ///< of the last Jacobian
};

/// Weighted least-squares cost 1/2 sum w |x(t) - obs|^2.
[[nodiscard]] double fit_cost(const Trajectory& x, const ObservationSet& obs);

/// Direction moving one Hermite coefficient of phi, as indexed in FitMask.
[[nodiscard]] Direction phi_coefficient_direction(const Parameter& gamma, std::size_t index);

/// gamma with the masked coordinates moved by delta (ordered theta, xi, phi).
[[nodiscard]] Parameter apply_step(const Parameter& gamma, const FitMask& mask, const Vector& delta);

[[nodiscard]] FitResult gauss_newton_fit(const ModelSpec& model, const Parameter& gamma0, const ObservationSet& obs,
                                         const FitMask& mask, const FitOptions& opts = {});

}  // namespace sdde
