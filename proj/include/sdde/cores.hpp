#pragma once

#include <cstddef>
#include <vector>

#include "sdde/model.hpp"

namespace sdde::cores {

// f cores. psi is the number of history arguments, n the state dimension.

/// f = Theta u with Theta the n x n matrix stored row-major in theta (p = n * n).
SmoothCore linear(std::size_t n, std::size_t psi);

/// n = 1: f = theta_1 * psi_0 * (1 - u / theta_2). Needs psi >= 1.
SmoothCore logistic(std::size_t psi);

/**
 * @brief g(a) = c + L a + 1/2 a^T S_o a per output o, S_o = (Q_o + Q_o^T) / 2.
 *
 * Covers the structured template for both f and tau: a is the flattened argument vector.
 * Q may be empty (purely affine core).
 */
SmoothCore quadratic(Vector c, Matrix L, std::vector<Matrix> Q);

// tau cores. q is the dimension of xi.

SmoothCore constant_delay(double value, std::size_t psi, std::size_t q);

/// tau = xi_1 + xi_2 tanh(psi_0).
SmoothCore tanh_delay(std::size_t psi, std::size_t q);

/// tau = xi_1 / (1 + psi_0^2).
SmoothCore rational_delay(std::size_t psi, std::size_t q);

/// tau = mean + amplitude * sin(2 pi frequency t); explicit time dependence only.
SmoothCore sinusoid_delay(double mean, double amplitude, double frequency, std::size_t psi, std::size_t q);

/// tau = xi_1.
SmoothCore parameter_delay(std::size_t psi, std::size_t q);

// Atoms.

PointLag constant_lag(double value);

/// eta(t) = mean + amplitude * sin(2 pi frequency t).
PointLag sine_lag(double mean, double amplitude, double frequency);

/// K(t, zeta) = M, constant.
Kernel constant_kernel(Matrix M, int nodes = 4);

/// K(t, zeta) = M exp(rate * zeta).
Kernel exponential_kernel(Matrix M, double rate, int nodes = 4);

}  // namespace sdde::cores
