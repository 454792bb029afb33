#include <doctest.h>

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>

#include "models.hpp"
#include "sdde/errors.hpp"
#include "sdde/trajectory.hpp"

using namespace sdde;
using sdde::testing::vec;

TEST_SUITE("trajectory") {

TEST_CASE("constant trajectory") {
  const auto c = Trajectory::constant(-1.0, 2.0, vec({3.5}));
  for (double t : {-1.0, -0.3, 0.0, 1.7, 2.0}) {
    CHECK(c.eval(t)[0] == 3.5);
    CHECK(c.eval_d1(t, Side::Left)[0] == 0.0);
    CHECK(c.eval_d2(t, Side::Right)[0] == 0.0);
  }
  CHECK(sup_norm(c) == 3.5);
  CHECK(norm_w1inf(c) == 3.5);
  CHECK(norm_w2inf(c) == 3.5);
}

TEST_CASE("one-sided derivatives at a breakpoint") {
  // 1 - t on [0, 1], (t - 2)^2 / 2 - 1/2 on [1, 2]
  const double knots[3] = {0.0, 1.0, 2.0};
  const Vector values[3] = {vec({1.0}), vec({0.0}), vec({-0.5})};
  const Vector ds[2] = {vec({-1.0}), vec({-1.0})};
  const Vector de[2] = {vec({-1.0}), vec({0.0})};
  const auto x = Trajectory::from_pieces(knots, values, ds, de);
  CHECK(x.eval(1.0)[0] == doctest::Approx(0.0));
  CHECK(x.eval_d1(1.0, Side::Left)[0] == doctest::Approx(-1.0));
  CHECK(x.eval_d1(1.0, Side::Right)[0] == doctest::Approx(-1.0));
  CHECK(x.eval_d2(1.0, Side::Left)[0] == doctest::Approx(0.0));
  CHECK(x.eval_d2(1.0, Side::Right)[0] == doctest::Approx(1.0));
  CHECK(x.eval(1.5)[0] == doctest::Approx(0.125 - 0.5));
}

TEST_CASE("interior derivative matches central differences") {
  std::vector<double> k;
  std::vector<Vector> v, d;
  for (int i = 0; i <= 8; ++i) {
    const double t = i / 8.0;
    k.push_back(t);
    v.push_back(vec({std::sin(3 * t)}));
    d.push_back(vec({3 * std::cos(3 * t)}));
  }
  const auto x = Trajectory::hermite(k, v, d);
  const double t = 0.37;
  double prev = 0.0;
  for (double h : {1e-2, 1e-3}) {
    const double fd = (x.eval(t + h)[0] - x.eval(t - h)[0]) / (2 * h);
    const double err = std::abs(fd - x.eval_d1(t, Side::Right)[0]);
    if (prev > 0.0) CHECK(err < prev / 50.0);
    prev = err;
  }
}

TEST_CASE("hermite interpolation reproduces nodes and converges at fourth order") {
  auto g = [](double t) { return std::exp(t) * std::sin(2 * t); };
  auto dg = [](double t) { return std::exp(t) * (std::sin(2 * t) + 2 * std::cos(2 * t)); };
  double prev = 0.0;
  for (int m : {8, 16, 32}) {
    std::vector<double> k;
    std::vector<Vector> v, d;
    for (int i = 0; i <= m; ++i) {
      k.push_back(static_cast<double>(i) / m);
      v.push_back(vec({g(k.back())}));
      d.push_back(vec({dg(k.back())}));
    }
    const auto x = Trajectory::hermite(k, v, d);
    for (std::size_t i = 0; i < k.size(); ++i) {
      CHECK(x.eval(k[i])[0] == v[i][0]);
      if (i + 1 < k.size()) CHECK(x.eval_d1(k[i], Side::Right)[0] == doctest::Approx(d[i][0]).epsilon(1e-13));
      if (i > 0) CHECK(x.eval_d1(k[i], Side::Left)[0] == doctest::Approx(d[i][0]).epsilon(1e-13));
    }
    double err = 0.0;
    for (int j = 0; j <= 2000; ++j) err = std::max(err, std::abs(x.eval(j / 2000.0)[0] - g(j / 2000.0)));
    if (prev > 0.0) {
      const double order = std::log2(prev / err);
      CHECK(order > 3.7);
      CHECK(order < 4.3);
    }
    prev = err;
  }
}

TEST_CASE("norms") {
  const double k[2] = {0.0, 1.0};
  const Vector v[2] = {vec({0.0}), vec({1.0})};
  const Vector d[2] = {vec({1.0}), vec({1.0})};
  const auto ramp = Trajectory::hermite(k, v, d);
  CHECK(sup_norm(ramp) == doctest::Approx(1.0));
  CHECK(norm_w1inf(ramp) == doctest::Approx(1.0));

  // cubic with an interior extremum, against dense sampling refined by Brent
  const Vector w[2] = {vec({0.2}), vec({-0.1})};
  const Vector s[2] = {vec({2.0}), vec({-1.5})};
  const auto bump = Trajectory::hermite(k, w, s);
  auto neg = [&](double t) { return -std::abs(bump.eval(t)[0]); };
  double best_t = 0.0, best = 0.0;
  for (int j = 0; j <= 20000; ++j) {
    const double t = j / 20000.0;
    if (-neg(t) > best) {
      best = -neg(t);
      best_t = t;
    }
  }
  const auto r = boost::math::tools::brent_find_minima(neg, std::max(0.0, best_t - 1e-4),
                                                       std::min(1.0, best_t + 1e-4), 52);
  CHECK(std::abs(sup_norm(bump) - (-r.second)) <= 1e-12);
  CHECK(bump.sup_norm_d1(0.0, 1.0) >= 2.0);
}

TEST_CASE("segments read the trajectory bit for bit") {
  const auto m = sdde::testing::linear_model(2.0);
  const auto sol = solve_tracked(m, sdde::testing::linear_gamma());
  for (double t : {0.3, 1.0, 1.77}) {
    const Segment seg(sol.x, t, 1.0);
    for (double z : {-1.0, -0.61, -0.25, 0.0}) CHECK(seg(z)[0] == sol.x.eval(t + z)[0]);
  }
}

TEST_CASE("queries outside the domain are errors") {
  const auto c = Trajectory::constant(0.0, 1.0, vec({1.0}));
  CHECK_THROWS_AS((void)c.eval(1.5), DomainError);
  CHECK_THROWS_AS((void)c.eval_d1(-0.1, Side::Right), DomainError);
}

TEST_CASE("serialization round trip") {
  const auto m = sdde::testing::sd_model(1.0);
  const auto x = solve(m, sdde::testing::sd_gamma());
  std::stringstream ss;
  x.write(ss);
  const auto y = Trajectory::read(ss);
  REQUIRE(y.pieces() == x.pieces());
  for (double t : sdde::testing::grid(-1.0, 1.0, 97)) {
    CHECK(y.eval(t)[0] == x.eval(t)[0]);
    CHECK(y.eval_d1(t, Side::Left)[0] == x.eval_d1(t, Side::Left)[0]);
  }
}

TEST_CASE("linear combination and parameter algebra") {
  const auto a = Trajectory::constant(-1.0, 0.0, vec({1.0}));
  const double k[3] = {-1.0, -0.4, 0.0};
  const Vector v[3] = {vec({0.0}), vec({1.0}), vec({-2.0})};
  const Vector d[3] = {vec({1.0}), vec({0.0}), vec({3.0})};
  const auto b = Trajectory::hermite(k, v, d);
  const auto c = linear_combination(2.0, a, -0.5, b);
  for (double t : sdde::testing::grid(-1.0, 0.0, 41)) CHECK(c.eval(t)[0] == doctest::Approx(2.0 - 0.5 * b.eval(t)[0]));

  const Parameter g{a, vec({1.0, 2.0}), vec({3.0})};
  const auto z = zero_direction(g);
  CHECK(gamma_norm(z) == 0.0);
  CHECK(gamma_norm(g) == doctest::Approx(1.0 + 2.0 + 3.0));
  const auto s = add(g, g);
  CHECK(s.theta[1] == 4.0);
  CHECK(s.phi.eval(-0.5)[0] == 2.0);
}

}  // TEST_SUITE
