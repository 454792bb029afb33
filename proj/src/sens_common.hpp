#pragma once

#include <vector>

#include "engine.hpp"
#include "sdde/sens1.hpp"

namespace sdde::detail {

void check_direction(const ModelSpec& model, const Direction& h);
EngineSettings engine_settings(const SolveConfig& cfg);
/// u(t) along the fixed solution x plus the point lags of both atom sets.
LagFn along_x_lags(const ModelSpec& model, const Parameter& gamma, const Trajectory& x);
/// Knots of traj in (0, alpha].
std::vector<double> interior_knots(const Trajectory& traj, double alpha);
bool pm_unverified(const ModelSpec& model, const Parameter& gamma, const Solution& sol, const SensOptions& opts);
FirstVariation first_variation(const ModelSpec& model, const Parameter& gamma, const Solution& sol,
                               const Direction& h, const SolveConfig& cfg, bool unverified);

}  // namespace sdde::detail
