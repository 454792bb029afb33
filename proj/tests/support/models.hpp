#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <vector>

#include "sdde/model.hpp"
#include "sdde/solver.hpp"
#include "sdde/trajectory.hpp"

namespace sdde::testing {

Vector vec(std::initializer_list<double> xs);

/// x'(t) = theta x(t - 1), r = 1.
ModelSpec linear_model(double horizon = 2.0);
/// phi == 1, theta = -1 (incompatible at 0).
Parameter linear_gamma(double theta = -1.0);
/// phi(s) = -s, theta = -1 (compatible).
Parameter linear_gamma_compatible(double theta = -1.0);
/// Method-of-steps polynomial solution for phi == 1, theta = -1.
double linear_exact(double t);

/// x'(t) = theta x(t - tau), tau = xi_1 + xi_2 tanh(x(t)), r = 1.
ModelSpec sd_model(double horizon = 2.0);
/// phi linear with the slope that makes it compatible, phi(0) = c0, xi = (0.5, 0.25), theta = -1.
Parameter sd_gamma(double c0 = 0.1);

/**
 * n = 2, r = 1: quadratic core over two point lags (one constant, one oscillating), an
 * exponential kernel, the current delayed state and theta (p = 2); tau = xi_1 / (1 + x_1(t)^2).
 */
ModelSpec vector_model(double horizon = 1.5);
/// Hermite phi on {-1, -0.5, 0} with the slope at 0 fixed up for compatibility.
Parameter vector_gamma(const ModelSpec& model);

/// tau = 0.5 + 0.45 sin(2 pi t), f = theta x(t - tau), r = 1.
ModelSpec sin_lag_model(double horizon = 1.0);
/// tau = 0.2 until t = 0.3, then t - 0.1 until 0.6, then 0.5: u is flat in the middle.
ModelSpec flat_lag_model(double horizon = 1.0);
/// f == 0.
ModelSpec zero_model(double tau = 0.7, double horizon = 2.0);

Trajectory constant_phi(std::size_t n, double r, double c);

/// Replaces the slope of phi at 0 until phi'(0-) matches the right-hand side.
Parameter make_compatible(const ModelSpec& model, Parameter gamma, int sweeps = 200);

/// Hermite history on the given knots with entries uniform in [-1, 1]; theta and xi likewise.
Direction random_direction(const ModelSpec& model, std::mt19937_64& rng,
                           const std::vector<double>& knots = {-1.0, -0.5, 0.0});

/// Evenly spaced times a, a + (b - a) / count, ..., b.
std::vector<double> grid(double a, double b, int count);

/// max over grid of |x(t) - y(t)|_inf.
double max_diff(const Trajectory& x, const Trajectory& y, const std::vector<double>& times);
double max_abs(const Trajectory& x, const std::vector<double>& times);

}  // namespace sdde::testing
