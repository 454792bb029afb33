#pragma once

#include <string>
#include <vector>

#include "sdde/model.hpp"
#include "sdde/solver.hpp"
#include "sdde/trajectory.hpp"

namespace sdde {

/// Perturbation sizes, relative to (|gamma| + 1) / |h|. Must be strictly decreasing and positive.
struct FdSchedule {
  std::vector<double> eps_list{1e-3, 5e-4, 2.5e-4};
  bool richardson = true;
};

struct FdResult {
  std::vector<Vector> values;          ///< per grid time
  std::vector<double> error;           ///< per grid time, |.|_inf
  double max_error = 0.0;
  std::vector<double> steps;           ///< the actual perturbation sizes used
  std::vector<std::vector<Vector>> levels;  ///< raw central differences per step, per grid time
  bool conditioning_warning = false;   ///< successive raw differences did not shrink
};

/// Directional derivative of t -> x(t, gamma) along h by central differences, optionally extrapolated.
[[nodiscard]] FdResult fd_first(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                                const std::vector<double>& t_grid, const FdSchedule& sched = {},
                                const SolveConfig& cfg = {});

/**
 * Mixed central difference of x along (h, y) at relative size eps. Symmetric in (h, y) bit for bit.
 */
[[nodiscard]] std::vector<Vector> fd_second(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                                            const Direction& y, const std::vector<double>& t_grid, double eps,
                                            const SolveConfig& cfg = {});

/// fd_second over a schedule with Richardson extrapolation; error from the last two table levels.
[[nodiscard]] FdResult fd_second_extrapolated(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                                              const Direction& y, const std::vector<double>& t_grid,
                                              const FdSchedule& sched = {}, const SolveConfig& cfg = {});

struct OrderInterval {
  double a = 0.0, b = 0.0;
  double order = 0.0;
};

struct OrderReport {
  std::vector<double> steps;
  std::vector<double> differences;  ///< sup |x_k - x_{k+1}| between successive halvings
  std::vector<double> orders;       ///< log2 of successive difference ratios
  double observed_order = 0.0;      ///< last entry of orders
  bool exact = false;               ///< all differences at roundoff level
  std::vector<OrderInterval> degraded;  ///< windows whose local order falls below degraded_below
  std::string summary() const;
};

/**
 * Step-halving convergence probe starting at cfg.step. halvings >= 2. The horizon is split into
 * `windows` equal windows; those with local order below degraded_below are reported.
 */
[[nodiscard]] OrderReport order_probe(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg,
                                      int halvings, int windows = 16, double degraded_below = 3.5);

}  // namespace sdde
