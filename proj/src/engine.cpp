#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "sdde/errors.hpp"

namespace sdde::detail {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool near_breakpoint(const std::vector<Breakpoint>& list, double t, double tol) {
  return std::any_of(list.begin(), list.end(), [&](const Breakpoint& b) { return std::abs(b.time - t) <= tol; });
}

class Stepper {
 public:
  Stepper(Trajectory& y, const RhsFn& rhs, const EngineSettings& s) : y_(y), rhs_(rhs), s_(s) {}

  // Appends the converged piece on [t0, t1].
  void step(double t0, double t1, bool at_breakpoint) {
    const double h = t1 - t0;
    const Vector y0 = y_.eval(t0);
    const Vector k1 = call(t0, Side::Right, t0, false);

    Vector y1, d1;
    if (!at_breakpoint && y_.pieces() > 0 && y_.end() > y_.start()) {
      const std::size_t p = y_.pieces() - 1;
      const Matrix c = y_.coefficients(p);
      const double s = t1 - y_.knots()[p];
      y1 = c.col(0) + s * (c.col(1) + s * (c.col(2) + s * c.col(3)));
      d1 = c.col(1) + s * (2.0 * c.col(2) + 3.0 * s * c.col(3));
    } else {
      y1 = y0 + h * k1;
      d1 = k1;
    }
    if (!y1.allFinite() || !d1.allFinite()) {
      y1 = y0 + h * k1;
      d1 = k1;
    }
    y_.append(t1, y1, k1, d1);

    const double tm = t0 + 0.5 * h;
    for (int it = 0; it < s_.max_iterations; ++it) {
      const Vector km = call(tm, Side::Right, t0, true);
      const Vector k4 = call(t1, Side::Left, t0, true);
      Vector y1n = y0 + (h / 6.0) * (k1 + 4.0 * km + k4);
      if (!y1n.allFinite() || !k4.allFinite()) {
        y_.pop_back();
        blowup(t0);
      }
      const double diff = inf_norm(y1n - y1) + h * inf_norm(k4 - d1);
      y1 = std::move(y1n);
      d1 = k4;
      y_.replace_last(t1, y1, k1, d1);
      if (diff <= s_.tol * (1.0 + inf_norm(y1))) return;
    }
    y_.pop_back();
    std::ostringstream msg;
    msg << "fixed-point iteration did not converge in " << s_.max_iterations << " iterations on [" << t0 << ", "
        << t1 << "]";
    throw StepError(msg.str(), t0);
  }

 private:
  // A non-finite model value means the state has left every sensible range.
  Vector call(double t, Side side, double t0, bool tentative) {
    Vector k;
    try {
      k = rhs_(t, y_, side);
    } catch (const NumericError&) {
      if (tentative) y_.pop_back();
      blowup(t0);
    }
    if (!k.allFinite()) {
      if (tentative) y_.pop_back();
      blowup(t0);
    }
    return k;
  }

  [[noreturn]] void blowup(double t0) const {
    std::ostringstream msg;
    msg << "state became non-finite after t = " << t0;
    throw BlowupError(msg.str(), t0);
  }

  Trajectory& y_;
  const RhsFn& rhs_;
  const EngineSettings& s_;
};

struct Crossing {
  double time;
  int generation;
};

}  // namespace

void register_breakpoint(std::vector<Breakpoint>& list, double time, int generation, double tol) {
  for (auto& b : list) {
    if (std::abs(b.time - time) <= tol) {
      b.generation = std::min(b.generation, generation);
      return;
    }
  }
  list.push_back({time, generation});
}

std::vector<Breakpoint> initial_breakpoints(const Trajectory& phi) {
  std::vector<Breakpoint> out{{0.0, 0}};
  const auto& k = phi.knots();
  for (std::size_t i = 1; i + 1 < k.size(); ++i) out.push_back({k[i], 0});
  return out;
}

EngineResult integrate(Trajectory init, double alpha, const RhsFn& rhs, const LagFn& lags,
                       const EngineSettings& settings, std::vector<Breakpoint> sources,
                       const std::vector<double>* fixed_mesh) {
  EngineResult res;
  res.y = std::move(init);
  res.breakpoints = std::move(sources);
  Trajectory& y = res.y;
  const double h = settings.step;
  const double snap = settings.snap;
  Stepper stepper(y, rhs, settings);

  std::vector<double> L0, L1, Ls;
  std::size_t mesh_pos = 0;
  double t = 0.0;
  while (t < alpha - snap) {
    double target;
    if (fixed_mesh) {
      while (mesh_pos < fixed_mesh->size() && (*fixed_mesh)[mesh_pos] <= t + snap) ++mesh_pos;
      target = mesh_pos < fixed_mesh->size() ? (*fixed_mesh)[mesh_pos] : alpha;
    } else {
      target = (std::floor((t + 0.25 * h) / h) + 1.0) * h;
      if (alpha - target < 0.25 * h) target = alpha;
    }
    target = std::min(target, alpha);

    const bool at_bp = near_breakpoint(res.breakpoints, t, snap);
    lags(t, y, L0);
    stepper.step(t, target, at_bp);
    lags(target, y, L1);

    // Earliest crossing of a tracked breakpoint by any monitored lag.
    double t_star = std::numeric_limits<double>::infinity();
    std::vector<Crossing> found;
    const std::size_t nsrc = res.breakpoints.size();
    for (std::size_t bi = 0; bi < nsrc; ++bi) {
      const Breakpoint b = res.breakpoints[bi];
      if (b.generation >= settings.depth) continue;
      for (std::size_t k = 0; k < L0.size(); ++k) {
        const double g0 = L0[k] - b.time, g1 = L1[k] - b.time;
        if (std::abs(g0) <= snap) continue;
        double root;
        if (std::abs(g1) <= snap) {
          root = target;
        } else if ((g0 < 0.0) != (g1 < 0.0)) {
          auto g = [&](double s) {
            if (s <= t) return g0;
            if (s >= target) return g1;
            lags(s, y, Ls);
            return Ls[k] - b.time;
          };
          boost::uintmax_t iters = 200;
          const auto bracket = boost::math::tools::toms748_solve(g, t, target, g0, g1,
                                                                 boost::math::tools::eps_tolerance<double>(50), iters);
          root = 0.5 * (bracket.first + bracket.second);
        } else {
          continue;
        }
        found.push_back({root, b.generation + 1});
        t_star = std::min(t_star, root);
      }
    }

    double t_end = target;
    if (!found.empty()) {
      if (t_star < target - snap && t_star > t) {
        y.pop_back();
        stepper.step(t, t_star, at_bp);
        t_end = t_star;
      }
      for (const auto& c : found) {
        if (std::abs(c.time - t_star) <= snap || (t_end == target && std::abs(c.time - target) <= snap)) {
          register_breakpoint(res.breakpoints, t_end, c.generation, snap);
          ++res.crossings;
        }
      }
    }
    t = t_end;
  }
  std::sort(res.breakpoints.begin(), res.breakpoints.end(),
            [](const Breakpoint& a, const Breakpoint& b) { return a.time < b.time; });
  return res;
}

}  // namespace sdde::detail
