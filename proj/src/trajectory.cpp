#include "sdde/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sdde/errors.hpp"

namespace sdde {
namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Cubic Hermite basis on sigma in [0, 1]; h is the piece length.
struct HermitePiece {
  double a, h;
  const double* ya;
  const double* yb;
  const double* da;
  const double* db;

  [[nodiscard]] double value(std::size_t c, double t) const {
    const double s = (t - a) / h;
    const double om = 1.0 - s;
    const double h10 = s * om * om;
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    // h00 = 1 - h01; written this way constants are reproduced exactly
    return ya[c] + h01 * (yb[c] - ya[c]) + h * (h10 * da[c] + h11 * db[c]);
  }
  [[nodiscard]] double d1(std::size_t c, double t) const {
    const double s = (t - a) / h;
    const double slope = (yb[c] - ya[c]) / h;
    return 6.0 * s * (1.0 - s) * slope + (3.0 * s * s - 4.0 * s + 1.0) * da[c] + (3.0 * s * s - 2.0 * s) * db[c];
  }
  [[nodiscard]] double d2(std::size_t c, double t) const {
    const double s = (t - a) / h;
    const double slope = (yb[c] - ya[c]) / h;
    return ((6.0 - 12.0 * s) * slope + (6.0 * s - 4.0) * da[c] + (6.0 * s - 2.0) * db[c]) / h;
  }
  // Coefficients of c0 + c1 s + c2 s^2 + c3 s^3 with s = t - a.
  void monomial(std::size_t c, double out[4]) const {
    const double slope = (yb[c] - ya[c]) / h;
    out[0] = ya[c];
    out[1] = da[c];
    out[2] = (3.0 * slope - 2.0 * da[c] - db[c]) / h;
    out[3] = (da[c] + db[c] - 2.0 * slope) / (h * h);
  }
};

// Real roots of a x^2 + b x + c inside the open interval (lo, hi).
void quadratic_roots_in(double a, double b, double c, double lo, double hi, std::vector<double>& out) {
  auto push = [&](double x) {
    if (std::isfinite(x) && x > lo && x < hi) out.push_back(x);
  };
  if (a == 0.0) {
    if (b != 0.0) push(-c / b);
    return;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  if (q != 0.0) {
    push(q / a);
    push(c / q);
  } else {
    push(-b / (2.0 * a));
  }
}

}  // namespace

Trajectory::Trajectory(double start, const Vector& value) : dim_(static_cast<std::size_t>(value.size())) {
  knots_.push_back(start);
  values_.assign(value.data(), value.data() + value.size());
}

Trajectory Trajectory::constant(double t0, double t1, const Vector& value) {
  if (!(t1 > t0)) throw DomainError("constant trajectory needs t1 > t0", t1);
  Trajectory out(t0, value);
  const Vector zero = Vector::Zero(value.size());
  out.append(t1, value, zero, zero);
  return out;
}

Trajectory Trajectory::hermite(std::span<const double> knots,
                               std::span<const Vector> values,
                               std::span<const Vector> derivatives) {
  if (knots.size() < 2 || values.size() != knots.size() || derivatives.size() != knots.size()) {
    throw DomainError("hermite trajectory needs matching knots/values/derivatives (>= 2 knots)");
  }
  Trajectory out(knots[0], values[0]);
  for (std::size_t i = 1; i < knots.size(); ++i) out.append(knots[i], values[i], derivatives[i - 1], derivatives[i]);
  return out;
}

Trajectory Trajectory::from_pieces(std::span<const double> knots,
                                   std::span<const Vector> values,
                                   std::span<const Vector> d_start,
                                   std::span<const Vector> d_end) {
  if (knots.size() < 2 || values.size() != knots.size() || d_start.size() + 1 != knots.size() ||
      d_end.size() + 1 != knots.size()) {
    throw DomainError("from_pieces: inconsistent sizes");
  }
  Trajectory out(knots[0], values[0]);
  for (std::size_t i = 1; i < knots.size(); ++i) out.append(knots[i], values[i], d_start[i - 1], d_end[i - 1]);
  return out;
}

void Trajectory::append(double t_end, const Vector& y_end, const Vector& d_start, const Vector& d_end) {
  if (knots_.empty()) throw DomainError("append on an unanchored trajectory");
  if (!(t_end > knots_.back())) throw DomainError("append: knots must increase", t_end);
  if (static_cast<std::size_t>(y_end.size()) != dim_ || static_cast<std::size_t>(d_start.size()) != dim_ ||
      static_cast<std::size_t>(d_end.size()) != dim_) {
    throw DomainError("append: dimension mismatch", t_end);
  }
  knots_.push_back(t_end);
  values_.insert(values_.end(), y_end.data(), y_end.data() + dim_);
  d_start_.insert(d_start_.end(), d_start.data(), d_start.data() + dim_);
  d_end_.insert(d_end_.end(), d_end.data(), d_end.data() + dim_);
}

void Trajectory::replace_last(double t_end, const Vector& y_end, const Vector& d_start, const Vector& d_end) {
  pop_back();
  append(t_end, y_end, d_start, d_end);
}

void Trajectory::pop_back() {
  if (pieces() == 0) throw DomainError("pop_back on a trajectory without pieces");
  knots_.pop_back();
  values_.resize(values_.size() - dim_);
  d_start_.resize(d_start_.size() - dim_);
  d_end_.resize(d_end_.size() - dim_);
}

void Trajectory::check_time(double t) const {
  if (pieces() == 0) throw DomainError("query on a trajectory without pieces", t);
  if (!(t >= knots_.front() && t <= knots_.back())) {
    std::ostringstream msg;
    msg << "time " << t << " outside trajectory domain [" << knots_.front() << ", " << knots_.back() << "]";
    throw DomainError(msg.str(), t);
  }
}

std::size_t Trajectory::locate(double t, Side side) const {
  check_time(t);
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  if (i >= pieces()) i = pieces() - 1;
  if (side == Side::Left && i > 0 && knots_[i] == t) --i;
  return i;
}

std::size_t Trajectory::knot_near(double t, double tol) const {
  if (knots_.empty()) return npos;
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  std::size_t best = npos;
  double best_d = tol;
  auto consider = [&](std::vector<double>::const_iterator k) {
    const double d = std::abs(*k - t);
    if (d <= best_d) {
      best_d = d;
      best = static_cast<std::size_t>(k - knots_.begin());
    }
  };
  if (it != knots_.end()) consider(it);
  if (it != knots_.begin()) consider(it - 1);
  return best;
}

Vector Trajectory::eval(double t) const {
  const std::size_t i = locate(t, Side::Right);
  const HermitePiece p{knots_[i], knots_[i + 1] - knots_[i], value_ptr(i), value_ptr(i + 1), ds_ptr(i), de_ptr(i)};
  Vector out(dim_);
  for (std::size_t c = 0; c < dim_; ++c) out[c] = p.value(c, t);
  return out;
}

Vector Trajectory::eval_d1(double t, Side side) const {
  const std::size_t i = locate(t, side);
  const HermitePiece p{knots_[i], knots_[i + 1] - knots_[i], value_ptr(i), value_ptr(i + 1), ds_ptr(i), de_ptr(i)};
  Vector out(dim_);
  for (std::size_t c = 0; c < dim_; ++c) out[c] = p.d1(c, t);
  return out;
}

Vector Trajectory::eval_d2(double t, Side side) const {
  const std::size_t i = locate(t, side);
  const HermitePiece p{knots_[i], knots_[i + 1] - knots_[i], value_ptr(i), value_ptr(i + 1), ds_ptr(i), de_ptr(i)};
  Vector out(dim_);
  for (std::size_t c = 0; c < dim_; ++c) out[c] = p.d2(c, t);
  return out;
}

Vector Trajectory::knot_value(std::size_t knot) const {
  return Eigen::Map<const Vector>(value_ptr(knot), static_cast<Eigen::Index>(dim_));
}
Vector Trajectory::piece_d_start(std::size_t piece) const {
  return Eigen::Map<const Vector>(ds_ptr(piece), static_cast<Eigen::Index>(dim_));
}
Vector Trajectory::piece_d_end(std::size_t piece) const {
  return Eigen::Map<const Vector>(de_ptr(piece), static_cast<Eigen::Index>(dim_));
}

Matrix Trajectory::coefficients(std::size_t piece) const {
  const HermitePiece p{knots_[piece], knots_[piece + 1] - knots_[piece], value_ptr(piece), value_ptr(piece + 1),
                       ds_ptr(piece), de_ptr(piece)};
  Matrix out(dim_, 4);
  for (std::size_t c = 0; c < dim_; ++c) {
    double m[4];
    p.monomial(c, m);
    for (int k = 0; k < 4; ++k) out(static_cast<Eigen::Index>(c), k) = m[k];
  }
  return out;
}

namespace {

// Shared driver for the exact piecewise sup norms. order selects x, x', x''.
double piecewise_sup(const Trajectory& traj, double a, double b, int order) {
  if (traj.pieces() == 0) return 0.0;
  a = std::max(a, traj.start());
  b = std::min(b, traj.end());
  if (a > b) return 0.0;
  const auto& knots = traj.knots();
  const std::size_t first = traj.locate(a, Side::Right);
  const std::size_t last = traj.locate(b, Side::Left);
  double best = 0.0;
  std::vector<double> pts;
  for (std::size_t i = first; i <= last; ++i) {
    const double lo = std::max(a, knots[i]);
    const double hi = std::min(b, knots[i + 1]);
    const Matrix coef = traj.coefficients(i);
    const Vector ya = traj.knot_value(i);
    const Vector yb = traj.knot_value(i + 1);
    const Vector da = traj.piece_d_start(i);
    const Vector db = traj.piece_d_end(i);
    const HermitePiece p{knots[i], knots[i + 1] - knots[i], ya.data(), yb.data(), da.data(), db.data()};
    for (std::size_t c = 0; c < traj.dim(); ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      pts.assign({lo, hi});
      const double c1 = coef(ci, 1), c2 = coef(ci, 2), c3 = coef(ci, 3);
      const double s_lo = lo - knots[i], s_hi = hi - knots[i];
      std::vector<double> crit;
      if (order == 0) {
        quadratic_roots_in(3.0 * c3, 2.0 * c2, c1, s_lo, s_hi, crit);
      } else if (order == 1 && c3 != 0.0) {
        const double v = -c2 / (3.0 * c3);
        if (v > s_lo && v < s_hi) crit.push_back(v);
      }
      for (double s : crit) pts.push_back(knots[i] + s);
      for (double t : pts) {
        const double v = order == 0 ? p.value(c, t) : (order == 1 ? p.d1(c, t) : p.d2(c, t));
        best = std::max(best, std::abs(v));
      }
    }
  }
  return best;
}

}  // namespace

double Trajectory::sup_norm(double a, double b) const { return piecewise_sup(*this, a, b, 0); }
double Trajectory::sup_norm_d1(double a, double b) const { return piecewise_sup(*this, a, b, 1); }
double Trajectory::sup_norm_d2(double a, double b) const { return piecewise_sup(*this, a, b, 2); }

void Trajectory::write(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "# sdde trajectory: t_start t_end y_start[n] y_end[n] d_start[n] d_end[n]\n";
  os << "dim " << dim_ << " pieces " << pieces() << "\n";
  for (std::size_t i = 0; i < pieces(); ++i) {
    os << knots_[i] << ' ' << knots_[i + 1];
    for (const double* p : {value_ptr(i), value_ptr(i + 1), ds_ptr(i), de_ptr(i)}) {
      for (std::size_t c = 0; c < dim_; ++c) os << ' ' << p[c];
    }
    os << '\n';
  }
  os.precision(old);
}

Trajectory Trajectory::read(std::istream& is) {
  std::string line;
  std::size_t dim = 0, count = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream hs(line);
    std::string k1, k2;
    if (!(hs >> k1 >> dim >> k2 >> count) || k1 != "dim" || k2 != "pieces") {
      throw DomainError("trajectory header malformed: " + line);
    }
    break;
  }
  if (count == 0) throw DomainError("trajectory has no pieces");
  Trajectory out;
  for (std::size_t i = 0; i < count; ++i) {
    double a = 0, b = 0;
    Vector ya(dim), yb(dim), da(dim), db(dim);
    if (!(is >> a >> b)) throw DomainError("trajectory row truncated");
    for (Vector* v : {&ya, &yb, &da, &db}) {
      for (std::size_t c = 0; c < dim; ++c) {
        if (!(is >> (*v)[static_cast<Eigen::Index>(c)])) throw DomainError("trajectory row truncated");
      }
    }
    if (i == 0) out = Trajectory(a, ya);
    out.append(b, yb, da, db);
  }
  return out;
}

Trajectory linear_combination(double a, const Trajectory& x, double b, const Trajectory& y) {
  if (x.dim() != y.dim()) throw DomainError("linear_combination: dimension mismatch");
  const double scale = std::max({1.0, std::abs(x.start()), std::abs(x.end())});
  if (std::abs(x.start() - y.start()) > 1e-12 * scale || std::abs(x.end() - y.end()) > 1e-12 * scale) {
    throw DomainError("linear_combination: trajectories span different intervals");
  }
  std::vector<double> knots;
  knots.reserve(x.knots().size() + y.knots().size());
  std::merge(x.knots().begin(), x.knots().end(), y.knots().begin(), y.knots().end(), std::back_inserter(knots));
  std::vector<double> merged;
  for (double k : knots) {
    if (merged.empty() || k - merged.back() > 1e-13 * scale) merged.push_back(k);
  }
  merged.back() = std::max(x.end(), y.end());
  merged.front() = std::min(x.start(), y.start());
  const double lo = std::max(x.start(), y.start());
  const double hi = std::min(x.end(), y.end());
  auto clamp = [&](double t) { return std::clamp(t, lo, hi); };

  Trajectory out(merged.front(), (a * x.eval(clamp(merged.front())) + b * y.eval(clamp(merged.front()))).eval());
  for (std::size_t i = 1; i < merged.size(); ++i) {
    const double t0 = clamp(merged[i - 1]);
    const double t1 = clamp(merged[i]);
    const Vector v = a * x.eval(t1) + b * y.eval(t1);
    const Vector ds = a * x.eval_d1(t0, Side::Right) + b * y.eval_d1(t0, Side::Right);
    const Vector de = a * x.eval_d1(t1, Side::Left) + b * y.eval_d1(t1, Side::Left);
    out.append(merged[i], v, ds, de);
  }
  return out;
}

double sup_norm(const Trajectory& traj) {
  return traj.pieces() == 0 ? 0.0 : traj.sup_norm(traj.start(), traj.end());
}

double norm_w1inf(const Trajectory& traj) {
  if (traj.pieces() == 0) return 0.0;
  return std::max(sup_norm(traj), traj.sup_norm_d1(traj.start(), traj.end()));
}

double norm_w2inf(const Trajectory& traj) {
  if (traj.pieces() == 0) return 0.0;
  return std::max(norm_w1inf(traj), traj.sup_norm_d2(traj.start(), traj.end()));
}

std::vector<double> Segment::breakpoints() const {
  std::vector<double> out{-r_};
  const auto& k = traj_->knots();
  const double lo = anchor_ - r_;
  auto it = std::upper_bound(k.begin(), k.end(), lo);
  for (; it != k.end() && *it < anchor_; ++it) out.push_back(*it - anchor_);
  out.push_back(0.0);
  return out;
}

double gamma_norm(const Parameter& g) { return norm_w1inf(g.phi) + inf_norm(g.theta) + inf_norm(g.xi); }

Parameter combine(double c1, const Parameter& a, double c2, const Parameter& b) {
  if (a.theta.size() != b.theta.size() || a.xi.size() != b.xi.size()) {
    throw DomainError("combine: parameter shapes differ");
  }
  return Parameter{linear_combination(c1, a.phi, c2, b.phi), c1 * a.theta + c2 * b.theta, c1 * a.xi + c2 * b.xi};
}

Parameter add(const Parameter& gamma, const Direction& d) { return combine(1.0, gamma, 1.0, d); }

Direction zero_direction(const Parameter& gamma) {
  return Direction{Trajectory::constant(gamma.phi.start(), gamma.phi.end(), Vector::Zero(gamma.phi.dim())),
                   Vector::Zero(gamma.theta.size()), Vector::Zero(gamma.xi.size())};
}

}  // namespace sdde
