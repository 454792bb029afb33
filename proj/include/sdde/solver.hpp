#pragma once

#include <vector>

#include "sdde/model.hpp"
#include "sdde/trajectory.hpp"

namespace sdde {

struct SolveConfig {
  double step = 1e-3;
  double tol = 1e-12;        ///< fixed-point tolerance, relative to 1 + |y|
  double tau_min = 1e-6;
  double max_alpha = 0.0;    ///< 0 means the model horizon T
  int discontinuity_depth = 3;
  int max_iterations = 50;
  double compat_tol = 1e-8;  ///< residual bound for the compatibility check
};

/// A tracked derivative discontinuity. Generation 0 are 0 and the knots of the initial function.
struct Breakpoint {
  double time = 0.0;
  int generation = 0;
};

struct Solution {
  Trajectory x;  ///< on [-r, alpha], including the initial function
  std::vector<Breakpoint> breakpoints;
  double alpha = 0.0;
  int crossings = 0;
};

/// Horizon actually integrated for cfg.
[[nodiscard]] double resolve_alpha(const ModelSpec& model, const SolveConfig& cfg);

/// Checks shapes of gamma against the model and of cfg; throws DomainError.
void check_inputs(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg);

[[nodiscard]] Solution solve_tracked(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg = {});
[[nodiscard]] Trajectory solve(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg = {});

struct CompatReport {
  Vector lhs;       ///< phi'(0-)
  Vector rhs;       ///< f(0, phi, phi(-tau), theta)
  double residual = 0.0;
  double tol = 0.0;
  bool compatible = false;
};

[[nodiscard]] CompatReport check_compatibility(const ModelSpec& model, const Parameter& gamma, double tol = 1e-8);

/**
 * Largest W^{1,inf} difference quotient |x(gamma + eps d) - x(gamma)| / (eps |d|) over the
 * given directions, taken over [-r, alpha].
 */
[[nodiscard]] double lipschitz_probe(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg,
                                     const std::vector<Direction>& directions, double eps);

}  // namespace sdde
