#include <doctest.h>

#include <cmath>
#include <random>

#include "models.hpp"
#include "sdde/errors.hpp"
#include "sdde/oracle.hpp"
#include "sdde/sens2.hpp"
#include "sdde/solver.hpp"

using namespace sdde;
using namespace sdde::testing;

namespace {

Trajectory ramp(double a, double b) {
  const double k[2] = {-1.0, 0.0};
  const Vector v[2] = {vec({a - b}), vec({a})};
  const Vector d[2] = {vec({b}), vec({b})};
  return Trajectory::hermite(k, v, d);
}

}  // namespace

TEST_SUITE("sens2") {

TEST_CASE("operators on the linear model") {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma_compatible();
  const auto x = solve(m, g);
  const auto hp = ramp(0.4, 2.0);   // h^phi(s) = 0.4 + 2 s
  const auto yp = ramp(-1.0, 0.5);
  const Vector ht = vec({0.3}), yt = vec({-2.0}), none(0);
  for (double s : {0.25, 0.6}) {
    const auto ops = assemble_operators(s, x, m, g);
    const DirectionView h{Segment(hp, s, 1.0), ht, none};  // anchored at s: reads hp(s - tau)
    const DirectionView y{Segment(yp, s, 1.0), yt, none};
    CHECK(ops.A(h) == 0.0);
    CHECK(ops.E(h)[0] == doctest::Approx(hp.eval(s - 1.0)[0]));
    CHECK(ops.F(h)[0] == doctest::Approx(2.0));
    CHECK(ops.G(h, y) == 0.0);
    CHECK(ops.H(h, y)[0] == 0.0);
    CHECK(ops.B(h, y)[0] == doctest::Approx(yt[0] * hp.eval(s - 1.0)[0] + ht[0] * yp.eval(s - 1.0)[0]));

    const auto z = constant_phi(1, 1.0, 0.0);
    const Vector zt = vec({0.0});
    const DirectionView o{Segment(z, 0.0, 1.0), zt, none};
    CHECK(ops.B(o, o)[0] == 0.0);
    CHECK(ops.F(o)[0] == 0.0);
  }
}

TEST_CASE("incompatible initial data is a hard error") {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma();
  const auto sol = solve_tracked(m, g);
  Direction d = zero_direction(g);
  d.theta[0] = 1.0;
  CHECK_THROWS_AS((void)assemble_operators(0.5, sol.x, m, g), HypothesisError);
  CHECK_THROWS_AS((void)solve_second_variation(m, g, sol, d, d, {}), HypothesisError);
}

TEST_CASE("analytic second variations") {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma_compatible();
  const auto sol = solve_tracked(m, g);
  Direction dth = zero_direction(g);
  dth.theta[0] = 1.0;
  Direction dphi = zero_direction(g);
  dphi.phi = constant_phi(1, 1.0, 1.0);

  const auto mixed = solve_second_variation(m, g, sol, dphi, dth, {});
  CHECK(mixed.compatible);
  for (double t : grid(0.0, 1.0, 20)) CHECK(std::abs(mixed.w.eval(t)[0] - t) < 1e-12);
  for (double t : grid(-1.0, 0.0, 10)) CHECK(mixed.w.eval(t)[0] == 0.0);

  const auto pure = solve_second_variation(m, g, sol, dth, dth, {});
  for (double t : grid(0.0, 1.0, 20)) CHECK(std::abs(pure.w.eval(t)[0]) < 1e-13);
  CHECK(std::abs(pure.w.eval(2.0)[0]) > 0.1);
  const auto times = grid(1.0, 2.0, 10);
  const auto fd = fd_second_extrapolated(m, g, dth, dth, times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(fd.values[i][0] - pure.w.eval(times[i])[0]) < 1e-8);

  const auto zero = solve_second_variation(m, g, sol, zero_direction(g), dth, {});
  CHECK(max_abs(zero.w, grid(0.0, 2.0, 40)) == 0.0);
}

TEST_CASE("state-dependent model: symmetry, bilinearity, consistency") {
  const auto m = sd_model(2.0);
  const auto g = sd_gamma();
  SolveConfig cfg;
  const auto sol = solve_tracked(m, g, cfg);
  std::mt19937_64 rng(17);
  const auto h = random_direction(m, rng);
  const auto y = random_direction(m, rng);
  const auto times = grid(0.0, 2.0, 200);

  const auto hy = solve_second_variation(m, g, sol, h, y, cfg);
  const auto yh = solve_second_variation(m, g, sol, y, h, cfg);
  CHECK(max_diff(hy.w, yh.w, times) <= 1e3 * std::pow(cfg.step, 4) + 1e-9);
  CHECK_FALSE(hy.hypothesis_unverified);

  const auto scaled = solve_second_variation(m, g, sol, combine(2.5, h, 0.0, h), y, cfg);
  const auto expect = linear_combination(2.5, hy.w, 0.0, hy.w);
  CHECK(max_diff(scaled.w, expect, times) <= 1e-9 * max_abs(expect, times));

  // d/d eps of z(gamma + eps y, h) at eps = 0
  const double eps = 1e-4 * (gamma_norm(g) + 1.0) / gamma_norm(y);
  auto z_at = [&](double e) {
    const auto ge = combine(1.0, g, e, y);
    const auto se = solve_tracked(m, ge, cfg);
    SensOptions o;
    o.verify_pm = false;
    return solve_first_variation(m, ge, se, h, cfg, o).z;
  };
  const auto zp = z_at(eps), zm = z_at(-eps);
  const auto dz = linear_combination(0.5 / eps, zp, -0.5 / eps, zm);
  CHECK(max_diff(dz, hy.w, grid(0.05, 2.0, 60)) <= 1e-5 * (1.0 + max_abs(hy.w, times)));
}

TEST_CASE("agreement with mixed central differences") {
  const auto m = sd_model(2.0);
  const auto g = sd_gamma();
  SolveConfig cfg;
  const auto sol = solve_tracked(m, g, cfg);
  const auto dirs = canonical_directions(m, g);
  const auto times = grid(0.1, 2.0, 19);
  const auto w = solve_second_variation(m, g, sol, dirs[0], dirs[2], cfg);
  const auto fd = fd_second_extrapolated(m, g, dirs[0], dirs[2], times, {}, cfg);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(fd.values[i][0] - w.w.eval(times[i])[0]) < 1e-6);
}

TEST_CASE("hessian tensor") {
  const auto m = linear_model(2.0);
  const auto g = linear_gamma_compatible();
  const auto sol = solve_tracked(m, g);
  Direction dth = zero_direction(g);
  dth.theta[0] = 1.0;
  const auto one = hessian_tensor(m, g, sol, {dth}, {});
  REQUIRE(one.size() == 1);
  const auto pure = solve_second_variation(m, g, sol, dth, dth, {});
  CHECK(max_diff(one[0][0].w, pure.w, grid(0.0, 2.0, 40)) == 0.0);
  CHECK(hessian_tensor(m, g, sol, {}, {}).empty());

  const auto sm = sd_model(2.0);
  const auto sg = sd_gamma();
  const auto ss = solve_tracked(sm, sg);
  const auto basis = canonical_directions(sm, sg);
  const auto H = hessian_tensor(sm, sg, ss, basis, {});
  REQUIRE(H.size() == 3);
  const auto times = grid(0.0, 2.0, 100);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      const auto again = solve_second_variation(sm, sg, ss, basis[j], basis[i], {});
      CHECK(max_diff(H[i][j].w, again.w, times) <= 1e-9);
      CHECK(max_diff(H[j][i].w, H[i][j].w, times) == 0.0);
    }
  }
}

}  // TEST_SUITE
