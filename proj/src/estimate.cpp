#include "sdde/estimate.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "sdde/errors.hpp"

namespace sdde {

FitMask FitMask::all_theta(const ModelSpec& model) {
  FitMask m;
  m.theta.resize(model.p());
  std::iota(m.theta.begin(), m.theta.end(), std::size_t{0});
  return m;
}

FitMask FitMask::all_parameters(const ModelSpec& model) {
  FitMask m = all_theta(model);
  m.xi.resize(model.q());
  std::iota(m.xi.begin(), m.xi.end(), std::size_t{0});
  return m;
}

double fit_cost(const Trajectory& x, const ObservationSet& obs) {
  double c = 0.0;
  for (const auto& o : obs.samples) c += 0.5 * o.weight * (x.eval(o.t) - o.value).squaredNorm();
  return c;
}

Direction phi_coefficient_direction(const Parameter& gamma, std::size_t index) {
  const auto& knots = gamma.phi.knots();
  const std::size_t n = gamma.phi.dim();
  const std::size_t k = index / 2 / n, c = (index / 2) % n;
  if (k >= knots.size()) throw DomainError("phi coefficient index out of range");
  std::vector<Vector> values(knots.size(), Vector::Zero(static_cast<Eigen::Index>(n)));
  std::vector<Vector> slopes = values;
  (index % 2 == 0 ? values : slopes)[k][static_cast<Eigen::Index>(c)] = 1.0;
  Direction d = zero_direction(gamma);
  d.phi = Trajectory::hermite(knots, values, slopes);
  return d;
}

namespace {

std::vector<Direction> mask_directions(const Parameter& gamma, const FitMask& mask) {
  std::vector<Direction> dirs;
  const Direction zero = zero_direction(gamma);
  for (std::size_t i : mask.theta) {
    if (i >= static_cast<std::size_t>(gamma.theta.size())) throw DomainError("fit mask: theta index out of range");
    Direction d = zero;
    d.theta[static_cast<Eigen::Index>(i)] = 1.0;
    dirs.push_back(std::move(d));
  }
  for (std::size_t i : mask.xi) {
    if (i >= static_cast<std::size_t>(gamma.xi.size())) throw DomainError("fit mask: xi index out of range");
    Direction d = zero;
    d.xi[static_cast<Eigen::Index>(i)] = 1.0;
    dirs.push_back(std::move(d));
  }
  for (std::size_t i : mask.phi) dirs.push_back(phi_coefficient_direction(gamma, i));
  return dirs;
}

Vector free_coordinates(const Parameter& gamma, const FitMask& mask) {
  Vector v(static_cast<Eigen::Index>(mask.size()));
  Eigen::Index j = 0;
  for (std::size_t i : mask.theta) v[j++] = gamma.theta[static_cast<Eigen::Index>(i)];
  for (std::size_t i : mask.xi) v[j++] = gamma.xi[static_cast<Eigen::Index>(i)];
  const std::size_t n = gamma.phi.dim();
  for (std::size_t i : mask.phi) {
    const std::size_t k = i / 2 / n, c = (i / 2) % n;
    const Side side = k == 0 ? Side::Right : Side::Left;
    v[j++] = i % 2 == 0 ? gamma.phi.knot_value(k)[static_cast<Eigen::Index>(c)]
                        : gamma.phi.eval_d1(gamma.phi.knots()[k], side)[static_cast<Eigen::Index>(c)];
  }
  return v;
}

}  // namespace

Parameter apply_step(const Parameter& gamma, const FitMask& mask, const Vector& delta) {
  const auto dirs = mask_directions(gamma, mask);
  Parameter out = gamma;
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    const double s = delta[static_cast<Eigen::Index>(j)];
    if (s != 0.0) out = add(out, combine(s, dirs[j], 0.0, dirs[j]));
  }
  return out;
}

FitResult gauss_newton_fit(const ModelSpec& model, const Parameter& gamma0, const ObservationSet& obs,
                           const FitMask& mask, const FitOptions& opts) {
  FitResult res;
  res.gamma = gamma0;
  if (obs.samples.empty() || mask.size() == 0) return res;

  const double alpha = resolve_alpha(model, opts.solve);
  std::size_t rows = 0;
  for (const auto& o : obs.samples) {
    if (!(o.t > 0.0 && o.t <= alpha)) throw DomainError("observation time outside (0, alpha]", o.t);
    if (!(o.weight > 0.0)) throw DomainError("observation weight must be positive", o.t);
    if (static_cast<std::size_t>(o.value.size()) != model.n()) throw DomainError("observation has wrong size", o.t);
    rows += model.n();
  }

  SensOptions sens;
  sens.verify_pm = false;
  const auto n = static_cast<Eigen::Index>(model.n());

  Solution sol = solve_tracked(model, res.gamma, opts.solve);
  double cost = fit_cost(sol.x, obs);
  res.history.push_back(cost);

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (cost <= opts.cost_tol) {
      res.converged = true;
      break;
    }
    const auto dirs = mask_directions(res.gamma, mask);
    const auto cols = first_variations(model, res.gamma, sol, dirs, opts.solve, sens);
    Matrix J(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dirs.size()));
    Vector resid(static_cast<Eigen::Index>(rows));
    Eigen::Index row = 0;
    for (const auto& o : obs.samples) {
      const double sw = std::sqrt(o.weight);
      resid.segment(row, n) = sw * (sol.x.eval(o.t) - o.value);
      for (std::size_t j = 0; j < cols.size(); ++j) {
        J.block(row, static_cast<Eigen::Index>(j), n, 1) = sw * cols[j].z.eval(o.t);
      }
      row += n;
    }
    Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    res.singular_values.assign(sv.data(), sv.data() + sv.size());
    if (sv.size() < static_cast<Eigen::Index>(dirs.size()) || sv[sv.size() - 1] <= opts.rank_tol * sv[0]) {
      throw RankError("Gauss-Newton normal equations are singular", res.singular_values);
    }
    const Vector delta = -svd.solve(resid);

    bool accepted = false;
    double lambda = 1.0;
    for (int k = 0; k <= opts.max_halvings; ++k, lambda *= 0.5) {
      const Parameter trial = apply_step(res.gamma, mask, lambda * delta);
      try {
        Solution trial_sol = solve_tracked(model, trial, opts.solve);
        const double trial_cost = fit_cost(trial_sol.x, obs);
        if (trial_cost <= cost) {
          res.gamma = trial;
          sol = std::move(trial_sol);
          cost = trial_cost;
          accepted = true;
          break;
        }
      } catch (const Error&) {
        // rejected trial point
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    ++res.iterations;
    res.history.push_back(cost);
    const double size = free_coordinates(res.gamma, mask).cwiseAbs().maxCoeff();
    if (lambda * delta.cwiseAbs().maxCoeff() <= opts.step_tol * (1.0 + size)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace sdde
