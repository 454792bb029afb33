#pragma once

#include <functional>
#include <vector>

#include "sdde/solver.hpp"
#include "sdde/trajectory.hpp"

namespace sdde::detail {

/// Right-hand side of a delay system in the unknown y. y holds the tentative piece while a step is solved.
using RhsFn = std::function<Vector(double t, const Trajectory& y, Side side)>;

/// Times t - lag_k(t) read by the right-hand side; crossings of breakpoints by these are tracked.
using LagFn = std::function<void(double t, const Trajectory& y, std::vector<double>& out)>;

struct EngineSettings {
  double step = 1e-3;
  double tol = 1e-12;
  int max_iterations = 50;
  int depth = 3;
  double snap = 1e-11;
};

struct EngineResult {
  Trajectory y;
  std::vector<Breakpoint> breakpoints;
  int crossings = 0;
};

/**
 * Method of steps from t = 0 to alpha. init covers [-r, 0]. If fixed_mesh is given the
 * steps follow it (plus any crossings found); otherwise they follow the grid k * step.
 */
EngineResult integrate(Trajectory init, double alpha, const RhsFn& rhs, const LagFn& lags,
                       const EngineSettings& settings, std::vector<Breakpoint> sources,
                       const std::vector<double>* fixed_mesh = nullptr);

/// Generation-0 breakpoints of an initial function: 0 and its interior knots.
std::vector<Breakpoint> initial_breakpoints(const Trajectory& phi);

/// Adds (time, gen) unless a breakpoint within tol exists, in which case the smaller generation is kept.
void register_breakpoint(std::vector<Breakpoint>& list, double time, int generation, double tol);

}  // namespace sdde::detail
