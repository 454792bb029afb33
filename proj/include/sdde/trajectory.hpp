#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "sdde/types.hpp"

namespace sdde {

/**
 * @brief Piecewise cubic Hermite curve t -> R^n on [start, end].
 *
 * Each piece stores the values at both knots (shared with its neighbours, so the
 * curve is continuous by construction) and its own one-sided end derivatives, so
 * the first derivative may jump at a knot. Every derivative query at a knot must
 * name the side.
 */
class Trajectory {
 public:
  Trajectory() = default;

  /// A curve with no pieces yet, anchored at (start, value). Pieces are added with append().
  Trajectory(double start, const Vector& value);

  static Trajectory constant(double t0, double t1, const Vector& value);

  /// C^1 Hermite interpolant through (knots[i], values[i]) with slopes derivatives[i].
  static Trajectory hermite(std::span<const double> knots,
                            std::span<const Vector> values,
                            std::span<const Vector> derivatives);

  /// General constructor: d_start[i] / d_end[i] are the one-sided derivatives of piece i.
  static Trajectory from_pieces(std::span<const double> knots,
                                std::span<const Vector> values,
                                std::span<const Vector> d_start,
                                std::span<const Vector> d_end);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t pieces() const noexcept { return knots_.empty() ? 0 : knots_.size() - 1; }
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] double start() const { return knots_.front(); }
  [[nodiscard]] double end() const { return knots_.back(); }
  [[nodiscard]] bool contains(double t) const noexcept {
    return !knots_.empty() && t >= knots_.front() && t <= knots_.back();
  }

  [[nodiscard]] Vector eval(double t) const;
  [[nodiscard]] Vector eval_d1(double t, Side side) const;
  [[nodiscard]] Vector eval_d2(double t, Side side) const;

  [[nodiscard]] Vector knot_value(std::size_t knot) const;
  [[nodiscard]] Vector piece_d_start(std::size_t piece) const;
  [[nodiscard]] Vector piece_d_end(std::size_t piece) const;

  /// Monomial coefficients of a piece in s = t - knot[piece]; column k multiplies s^k.
  [[nodiscard]] Matrix coefficients(std::size_t piece) const;

  /// Index of the piece used for a query at t from the given side.
  [[nodiscard]] std::size_t locate(double t, Side side) const;

  /// Index of a knot within `tol` of t, or npos.
  [[nodiscard]] std::size_t knot_near(double t, double tol) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Builder interface used by the integrators.
  void append(double t_end, const Vector& y_end, const Vector& d_start, const Vector& d_end);
  void replace_last(double t_end, const Vector& y_end, const Vector& d_start, const Vector& d_end);
  void pop_back();

  /// Sup of |.|_inf over [a, b], exact over each cubic piece.
  [[nodiscard]] double sup_norm(double a, double b) const;
  [[nodiscard]] double sup_norm_d1(double a, double b) const;
  [[nodiscard]] double sup_norm_d2(double a, double b) const;

  void write(std::ostream& os) const;
  static Trajectory read(std::istream& is);

 private:
  void check_time(double t) const;
  [[nodiscard]] const double* value_ptr(std::size_t knot) const { return values_.data() + knot * dim_; }
  [[nodiscard]] const double* ds_ptr(std::size_t piece) const { return d_start_.data() + piece * dim_; }
  [[nodiscard]] const double* de_ptr(std::size_t piece) const { return d_end_.data() + piece * dim_; }

  std::size_t dim_ = 0;
  std::vector<double> knots_;
  std::vector<double> values_;   // knots x dim
  std::vector<double> d_start_;  // pieces x dim
  std::vector<double> d_end_;    // pieces x dim
};

/// a * x + b * y on the union of both knot sets. Both curves must span the same interval.
[[nodiscard]] Trajectory linear_combination(double a, const Trajectory& x, double b, const Trajectory& y);

[[nodiscard]] double sup_norm(const Trajectory& traj);
[[nodiscard]] double norm_w1inf(const Trajectory& traj);
[[nodiscard]] double norm_w2inf(const Trajectory& traj);

/// The history window x_t(zeta) = x(t + zeta), zeta in [-r, 0].
class Segment {
 public:
  Segment(const Trajectory& traj, double anchor, double r) : traj_(&traj), anchor_(anchor), r_(r) {}

  [[nodiscard]] Vector operator()(double zeta) const { return traj_->eval(anchor_ + zeta); }
  [[nodiscard]] Vector d1(double zeta, Side side) const { return traj_->eval_d1(anchor_ + zeta, side); }
  [[nodiscard]] Vector d2(double zeta, Side side) const { return traj_->eval_d2(anchor_ + zeta, side); }

  [[nodiscard]] const Trajectory& trajectory() const noexcept { return *traj_; }
  [[nodiscard]] double anchor() const noexcept { return anchor_; }
  [[nodiscard]] double r() const noexcept { return r_; }
  [[nodiscard]] std::size_t dim() const noexcept { return traj_->dim(); }

  /// Knots of the underlying curve inside the window, in zeta coordinates, including -r and 0.
  [[nodiscard]] std::vector<double> breakpoints() const;

  [[nodiscard]] double sup_norm() const { return traj_->sup_norm(anchor_ - r_, anchor_); }

 private:
  const Trajectory* traj_;
  double anchor_;
  double r_;
};

[[nodiscard]] inline double sup_norm(const Segment& seg) { return seg.sup_norm(); }

/**
 * @brief A parameter triple (phi, theta, xi); also used for directions h.
 *
 * phi lives on [-r, 0]; theta and xi are finite-dimensional.
 */
struct Parameter {
  Trajectory phi;
  Vector theta;
  Vector xi;
};
using Direction = Parameter;

/// |phi|_{W^{1,inf}} + |theta|_inf + |xi|_inf.
[[nodiscard]] double gamma_norm(const Parameter& g);

/// c1 * a + c2 * b, componentwise. Symmetric under swapping (c1, a) with (c2, b).
[[nodiscard]] Parameter combine(double c1, const Parameter& a, double c2, const Parameter& b);

/// gamma + d.
[[nodiscard]] Parameter add(const Parameter& gamma, const Direction& d);

/// The zero direction shaped like gamma.
[[nodiscard]] Direction zero_direction(const Parameter& gamma);

}  // namespace sdde
