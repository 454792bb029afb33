#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdde/trajectory.hpp"
#include "sdde/types.hpp"

namespace sdde {

/// A time-dependent point lag eta(t) in [0, r] with its rate d eta / dt.
struct PointLag {
  std::function<double(double)> value;
  std::function<double(double)> rate;
};

/// Matrix-valued kernel K(t, zeta), rows x n, integrated against the history over [-r, 0].
struct Kernel {
  std::size_t rows = 0;
  std::function<Matrix(double, double)> value;
  std::function<Matrix(double, double)> time_partial;
  int nodes = 4;  ///< Gauss-Legendre nodes per trajectory piece.
};

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
[[nodiscard]] QuadratureRule gauss_legendre(int nodes);

/// Where a functional reads the history: point values psi(-lag_i(t)) and at most one kernel integral.
struct DelayAtomSet {
  std::vector<PointLag> point_lags;
  std::optional<Kernel> kernel;

  /// Length of the flattened history arguments for state dimension n.
  [[nodiscard]] std::size_t psi_size(std::size_t n) const {
    return point_lags.size() * n + (kernel ? kernel->rows : 0);
  }
};

/**
 * @brief Finite-dimensional core (f-bar or tau-bar) with analytic partials.
 *
 * Arguments are flattened: for f they are [history args, u (n), theta (p)], for
 * tau they are [history args, xi (q)]. grad is outputs x arity; hess holds one
 * arity x arity matrix per output. time_partial may be left empty for cores that
 * do not depend on t explicitly.
 */
struct SmoothCore {
  std::size_t arity = 0;
  std::size_t outputs = 0;
  std::function<Vector(double, const Vector&)> eval;
  std::function<Matrix(double, const Vector&)> grad;
  std::function<std::vector<Matrix>(double, const Vector&)> hess;
  std::function<Vector(double, const Vector&)> time_partial;
  std::string name;
};

/// Position of the argument groups of a core.
struct ArgLayout {
  std::size_t psi = 0;       ///< history arguments occupy [0, psi)
  std::size_t state = 0;     ///< u occupies [psi, psi + state); zero for tau
  std::size_t param = 0;     ///< theta / xi occupy the tail
  [[nodiscard]] std::size_t state_offset() const { return psi; }
  [[nodiscard]] std::size_t param_offset() const { return psi + state; }
  [[nodiscard]] std::size_t arity() const { return psi + state + param; }
};

/**
 * @brief The right-hand side f(t, psi, u, theta) and delay tau(t, psi, xi) of
 * x'(t) = f(t, x_t, x(t - tau(t, x_t, xi)), theta) in structured form.
 *
 * Immutable after construction; the constructor validates dimensions.
 */
class ModelSpec {
 public:
  ModelSpec(std::size_t n, std::size_t p, std::size_t q, double r, double horizon, DelayAtomSet f_atoms,
            SmoothCore f_core, DelayAtomSet tau_atoms, SmoothCore tau_core);

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t p() const noexcept { return p_; }
  [[nodiscard]] std::size_t q() const noexcept { return q_; }
  [[nodiscard]] double r() const noexcept { return r_; }
  [[nodiscard]] double horizon() const noexcept { return horizon_; }
  [[nodiscard]] const DelayAtomSet& f_atoms() const noexcept { return f_atoms_; }
  [[nodiscard]] const DelayAtomSet& tau_atoms() const noexcept { return tau_atoms_; }
  [[nodiscard]] const SmoothCore& f_core() const noexcept { return f_core_; }
  [[nodiscard]] const SmoothCore& tau_core() const noexcept { return tau_core_; }
  [[nodiscard]] const ArgLayout& f_layout() const noexcept { return f_layout_; }
  [[nodiscard]] const ArgLayout& tau_layout() const noexcept { return tau_layout_; }
  [[nodiscard]] const QuadratureRule& f_rule() const noexcept { return f_rule_; }
  [[nodiscard]] const QuadratureRule& tau_rule() const noexcept { return tau_rule_; }

 private:
  std::size_t n_, p_, q_;
  double r_, horizon_;
  DelayAtomSet f_atoms_;
  SmoothCore f_core_;
  DelayAtomSet tau_atoms_;
  SmoothCore tau_core_;
  ArgLayout f_layout_, tau_layout_;
  QuadratureRule f_rule_, tau_rule_;
};

/**
 * @brief Linear map from a history function to the flattened history arguments at a fixed t.
 *
 * gather(h) = [h(-lag_1); ...; h(-lag_m); int K(t, zeta) h(zeta) d zeta].
 */
struct PsiMap {
  double t = 0.0;
  std::size_t n = 0;
  std::vector<double> lags;
  const Kernel* kernel = nullptr;
  const QuadratureRule* rule = nullptr;

  [[nodiscard]] std::size_t size() const { return lags.size() * n + (kernel ? kernel->rows : 0); }
  [[nodiscard]] Vector gather(const Segment& h) const;
};

/// Finite representation of D_2 g: sum_j M_j h(-lag_j) + kernel_coeff * int K h.
struct PhiPart {
  PsiMap map;
  std::vector<std::pair<double, Matrix>> point_terms;
  Matrix kernel_coeff;
};
[[nodiscard]] Vector apply_phi_part(const PhiPart& part, const Segment& h);

/// First derivatives of f (state/param = D_3 f, D_4 f) or of tau (state empty, param = D_3 tau).
struct FirstDerivative {
  PhiPart phi;
  Matrix state;
  Matrix param;
};

enum class ArgClass { Psi = 2, State = 3, Param = 4 };

/**
 * @brief Second derivatives D_ij of f or tau as bilinear forms on the argument classes.
 *
 * History directions enter through map.gather(); State and Param directions are plain vectors.
 */
struct BilinearTable {
  PsiMap map;
  ArgLayout layout;
  std::vector<Matrix> hess;

  [[nodiscard]] Vector gather(const Segment& h) const { return map.gather(h); }
};
/// D_ij g <a, b>; a and b are flattened arguments of classes i and j.
[[nodiscard]] Vector apply_bilinear(const BilinearTable& table, ArgClass i, ArgClass j, const Vector& a,
                                    const Vector& b);

/// Flattened core arguments of f at (t, seg, u, theta).
[[nodiscard]] Vector f_arguments(const ModelSpec& model, double t, const Segment& seg, const Vector& u,
                                 const Vector& theta);
/// Flattened core arguments of tau at (t, seg, xi).
[[nodiscard]] Vector tau_arguments(const ModelSpec& model, double t, const Segment& seg, const Vector& xi);

[[nodiscard]] Vector eval_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u,
                            const Vector& theta);
[[nodiscard]] double eval_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi);

[[nodiscard]] FirstDerivative d_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u,
                                  const Vector& theta);
[[nodiscard]] BilinearTable d2_f(const ModelSpec& model, double t, const Segment& seg, const Vector& u,
                                 const Vector& theta);
[[nodiscard]] FirstDerivative d_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi);
[[nodiscard]] BilinearTable d2_tau(const ModelSpec& model, double t, const Segment& seg, const Vector& xi);

/// Integral over [-r, 0] of the kernel's time partial against seg plus K against seg', as needed by d/dt.
[[nodiscard]] Vector kernel_time_derivative(const Kernel& kernel, const QuadratureRule& rule, double t,
                                            const Segment& seg);

struct ValidationCheck {
  std::string name;
  double max_mismatch = 0.0;
  double scale = 0.0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed = true;
  [[nodiscard]] const ValidationCheck* find(const std::string& name) const;
};

/**
 * Cross-checks every supplied partial of both cores and the lag rates against
 * central differences at pseudo-random probe points (fixed seed). Core arguments
 * are drawn from [-radius, radius]. Mismatches are compared with tol * max(1, |ref|).
 */
[[nodiscard]] ValidationReport validate_model(const ModelSpec& model, int probes, double tol,
                                              double radius = 1.0, unsigned seed = 12345);

}  // namespace sdde
