// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "models.hpp"
#include "sdde/errors.hpp"
#include "sdde/estimate.hpp"
#include "sdde/lag.hpp"
#include "sdde/oracle.hpp"
#include "sdde/sens1.hpp"
#include "sdde/sens2.hpp"
#include "sdde/solver.hpp"

using namespace sdde;
using namespace sdde::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget;  // seconds, 0 = none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome solver_order() {
  const auto m2 = linear_model(2.0);
  SolveConfig c;
  c.step = 1e-3;
  const auto x = solve(m2, linear_gamma(), c);
  double err2 = 0.0;
  for (double t : grid(0.0, 2.0, 2000)) err2 = std::max(err2, std::abs(x.eval(t)[0] - linear_exact(t)));
  const double at2 = std::abs(x.eval(2.0)[0] - linear_exact(2.0));

  // On [0, 2] the solution is a quadratic and the scheme is exact, so the halving ratio is read on [0, 8].
  const auto m8 = linear_model(8.0);
  const auto times = grid(0.0, 8.0, 8000);
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    SolveConfig ch;
    ch.step = h;
    const auto xh = solve(m8, linear_gamma(), ch);
    double e = 0.0;
    for (double t : times) e = std::max(e, std::abs(xh.eval(t)[0] - linear_exact(t)));
    errs.push_back(e);
  }
  bool ratios_ok = true;
  std::string rs;
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    const double r = errs[k] / errs[k + 1];
    ratios_ok = ratios_ok && r >= 12.0 && r <= 20.0;
    rs += fmt(" %.2f", r);
  }
  return {at2 <= 1e-8 && err2 <= 1e-8 && ratios_ok,
          fmt("|x(2) - exact| = %.2e, sup on [0,2] = %.2e, halving ratios on [0,8]:%s", at2, err2, rs.c_str())};
}

Outcome first_order_analytic() {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma();
  const auto sol = solve_tracked(m, g);
  Direction dth = zero_direction(g);
  dth.theta[0] = 1.0;
  Direction dphi = zero_direction(g);
  dphi.phi = constant_phi(1, 1.0, 1.0);
  const auto z = first_variations(m, g, sol, {dth, dphi}, {});
  const double e1 = std::abs(z[0].z.eval(1.0)[0] - 1.0);
  double e2 = 0.0;
  for (double t : grid(0.0, 1.0, 1000)) e2 = std::max(e2, std::abs(z[1].z.eval(t)[0] - (1.0 - t)));
  return {e1 <= 1e-8 && e2 <= 1e-8, fmt("|z_theta(1) - 1| = %.2e, sup |z_phi - (1 - t)| = %.2e", e1, e2)};
}

Outcome first_order_fd() {
  const auto m = sd_model(2.0);
  const auto g = sd_gamma();
  SolveConfig cfg;
  cfg.step = 1e-3;
  const auto sol = solve_tracked(m, g, cfg);
  const auto times = grid(0.0, 2.0, 40);
  const auto cols = sensitivity_matrix(m, g, sol, {}, cfg);
  double err = 0.0;
  for (const auto& col : cols) {
    const auto fd = fd_first(m, g, col.direction, times, {}, cfg);
    for (std::size_t i = 0; i < times.size(); ++i) err = std::max(err, std::abs(fd.values[i][0] - col.z.eval(times[i])[0]));
  }
  return {err <= 1e-5, fmt("max |z - fd| over %zu directions = %.2e", cols.size(), err)};
}

Outcome second_order_analytic() {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma_compatible();
  const auto sol = solve_tracked(m, g);
  Direction dth = zero_direction(g);
  dth.theta[0] = 1.0;
  Direction dphi = zero_direction(g);
  dphi.phi = constant_phi(1, 1.0, 1.0);
  const auto mixed = solve_second_variation(m, g, sol, dphi, dth, {});
  const auto pure = solve_second_variation(m, g, sol, dth, dth, {});
  double e1 = 0.0, e2 = 0.0;
  for (double t : grid(0.0, 1.0, 1000)) {
    e1 = std::max(e1, std::abs(mixed.w.eval(t)[0] - t));
    e2 = std::max(e2, std::abs(pure.w.eval(t)[0]));
  }
  return {e1 <= 1e-6 && e2 <= 1e-8, fmt("sup |w_mixed - t| = %.2e, sup |w_theta,theta| = %.2e", e1, e2)};
}

Outcome second_order_fd() {
  const auto m = sd_model(2.0);
  const auto g = sd_gamma();
  SolveConfig cfg;
  cfg.step = 1e-3;
  const auto sol = solve_tracked(m, g, cfg);
  const auto basis = canonical_directions(m, g);
  const auto times = grid(0.0, 2.0, 40);
  const auto H = hessian_tensor(m, g, sol, basis, cfg);
  double err = 0.0, sym = 0.0;
  const auto dense = grid(0.0, 2.0, 2000);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i; j < basis.size(); ++j) {
      const auto fd = fd_second_extrapolated(m, g, basis[i], basis[j], times, {}, cfg);
      for (std::size_t k = 0; k < times.size(); ++k)
        err = std::max(err, std::abs(fd.values[k][0] - H[i][j].w.eval(times[k])[0]));
      if (i != j) {
        const auto swapped = solve_second_variation(m, g, sol, basis[j], basis[i], cfg);
        sym = std::max(sym, max_diff(H[i][j].w, swapped.w, dense));
      }
    }
  }
  return {err <= 1e-4 && sym <= 1e-6, fmt("max |w - fd2| = %.2e, sup |w^{h,y} - w^{y,h}| = %.2e", err, sym)};
}

Outcome gating() {
  const auto m = linear_model(2.0);
  const bool flags_bad = !check_compatibility(m, linear_gamma()).compatible;
  const bool flags_good = check_compatibility(m, linear_gamma_compatible()).compatible;
  bool raised = false;
  const auto g = linear_gamma();
  const auto sol = solve_tracked(m, g);
  Direction d = zero_direction(g);
  d.theta[0] = 1.0;
  try {
    (void)solve_second_variation(m, g, sol, d, d, {});
  } catch (const HypothesisError&) {
    raised = true;
  }
  const auto sm = sin_lag_model(1.0);
  const auto sx = solve(sm, g);
  const std::size_t cells = 2000;
  const auto rep = check_pm(sm, g, sx, cells);
  const int dense = 10 * static_cast<int>(cells);
  std::size_t brute = 0;
  double prev = 1.0 - 0.9 * std::numbers::pi;
  for (int i = 1; i <= dense; ++i) {
    const double cur = 1.0 - 0.9 * std::numbers::pi * std::cos(2 * std::numbers::pi * i / dense);
    if ((prev > 0) != (cur > 0)) ++brute;
    prev = cur;
  }
  const bool counts = rep.sign_changes == brute && rep.pieces() == brute + 1;
  return {flags_bad && flags_good && raised && counts,
          fmt("constant phi incompatible: %d, phi(s) = -s compatible: %d, HypothesisError: %d, "
              "sign changes %zu vs brute force %zu",
              flags_bad, flags_good, raised, rep.sign_changes, brute)};
}

struct Defects {
  double first = 0.0, second = 0.0;
};

Defects linearity_suite(const ModelSpec& m, const Parameter& g, unsigned seed, int pairs) {
  // the defect is a linearity property, independent of the step; the kernel model is costly at fine steps
  SolveConfig cfg;
  cfg.step = 1e-2;
  SensOptions opts;
  opts.verify_pm = false;
  const auto sol = solve_tracked(m, g, cfg);
  const auto times = grid(0.0, sol.alpha, 100);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  Defects d;
  for (int p = 0; p < pairs; ++p) {
    const auto h = random_direction(m, rng);
    const auto k = random_direction(m, rng);
    const auto y = random_direction(m, rng);
    const double a = coef(rng), b = coef(rng);
    const auto c = combine(a, h, b, k);
    const auto z = first_variations(m, g, sol, {h, k, c, y}, cfg, opts);
    const auto zc = linear_combination(a, z[0].z, b, z[1].z);
    const double s1 = std::abs(a) * max_abs(z[0].z, times) + std::abs(b) * max_abs(z[1].z, times);
    d.first = std::max(d.first, max_diff(z[2].z, zc, times) / s1);

    const auto wh = solve_second_variation(m, g, sol, h, y, cfg, &z[0], &z[3], opts);
    const auto wk = solve_second_variation(m, g, sol, k, y, cfg, &z[1], &z[3], opts);
    const auto wc = solve_second_variation(m, g, sol, c, y, cfg, &z[2], &z[3], opts);
    const auto expect = linear_combination(a, wh.w, b, wk.w);
    const double s2 = std::abs(a) * max_abs(wh.w, times) + std::abs(b) * max_abs(wk.w, times);
    d.second = std::max(d.second, max_diff(wc.w, expect, times) / s2);
  }
  return d;
}

Outcome linearity() {
  const auto lm = linear_model(2.0);
  const auto sm = sd_model(2.0);
  const auto vm = vector_model(1.5);
  const Defects a = linearity_suite(lm, linear_gamma_compatible(), 101, 50);
  const Defects b = linearity_suite(sm, sd_gamma(), 202, 50);
  const Defects c = linearity_suite(vm, vector_gamma(vm), 303, 50);
  const double first = std::max({a.first, b.first, c.first});
  const double second = std::max({a.second, b.second, c.second});
  return {first <= 1e-9 && second <= 1e-8,
          fmt("relative defects, first order %.2e / %.2e / %.2e, second order %.2e / %.2e / %.2e", a.first,
              b.first, c.first, a.second, b.second, c.second)};
}

Outcome estimation() {
  const auto m = linear_model(2.0);
  const auto truth = solve(m, linear_gamma(-1.0));
  ObservationSet obs;
  for (int i = 1; i <= 20; ++i) obs.samples.push_back({0.1 * i, truth.eval(0.1 * i), 1.0});
  const auto r = gauss_newton_fit(m, linear_gamma(-0.5), obs, FitMask::all_theta(m));
  bool monotone = true;
  for (std::size_t i = 1; i < r.history.size(); ++i) monotone = monotone && r.history[i] <= r.history[i - 1];
  const double err = std::abs(r.gamma.theta[0] + 1.0);
  return {err <= 1e-6 && r.iterations <= 6 && monotone,
          fmt("|theta - theta*| = %.2e after %d iterations, monotone history: %d", err, r.iterations, monotone)};
}

Outcome gronwall() {
  const double alpha = 4.0;
  const auto m = linear_model(alpha);
  const auto g = linear_gamma();
  const auto x0 = solve(m, g);
  const auto early = grid(alpha / 80.0, alpha / 2.0, 39);
  const auto late = grid(alpha / 2.0, alpha, 40);
  std::mt19937_64 rng(909);
  const double size = 1e-3;
  std::vector<Trajectory> xs;
  double lambda = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto d = random_direction(m, rng);
    xs.push_back(solve(m, combine(1.0, g, size / gamma_norm(d), d)));
    for (double t : early) {
      const double diff = std::abs(xs.back().eval(t)[0] - x0.eval(t)[0]);
      if (diff > 0.0) lambda = std::max(lambda, std::log(diff / size) / t);
    }
  }
  double worst = 0.0;
  for (const auto& x : xs)
    for (double t : late) worst = std::max(worst, std::abs(x.eval(t)[0] - x0.eval(t)[0]) / (size * std::exp(lambda * t)));
  return {worst <= 1.2, fmt("fitted Lambda = %.4f, worst ratio to the bound on [%.0f, %.0f] = %.3f (limit 1.2)",
                            lambda, alpha / 2.0, alpha, worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "solver order", 1.0, solver_order},
      {2, "first-order analytic match", 0.0, first_order_analytic},
      {3, "first-order FD match", 10.0, first_order_fd},
      {4, "second-order analytic match", 0.0, second_order_analytic},
      {5, "second-order FD match and symmetry", 30.0, second_order_fd},
      {6, "hypothesis gating", 0.0, gating},
      {7, "linearity and bilinearity", 0.0, linearity},
      {8, "estimation round trip", 0.0, estimation},
      {9, "Gronwall stability", 0.0, gronwall},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget <= 0.0 || secs < c.budget;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s  criterion %d  %-36s %s  [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.budget > 0.0 ? fmt(", budget %.0f s", c.budget).c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
