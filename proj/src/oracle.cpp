#include "sdde/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "sdde/errors.hpp"

namespace sdde {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_schedule(const FdSchedule& s) {
  if (s.eps_list.empty()) throw DomainError("fd schedule: eps_list is empty");
  for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
    if (!(s.eps_list[i] > 0.0) || (i > 0 && !(s.eps_list[i] < s.eps_list[i - 1]))) {
      throw DomainError("fd schedule: eps_list must be positive and strictly decreasing");
    }
  }
}

std::vector<Vector> sample(const Trajectory& x, const std::vector<double>& t_grid) {
  std::vector<Vector> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) out.push_back(x.eval(t));
  return out;
}

std::vector<std::vector<Vector>> solve_all(const ModelSpec& model, const std::vector<Parameter>& params,
                                           const std::vector<double>& t_grid, const SolveConfig& cfg) {
  std::vector<std::future<std::vector<Vector>>> jobs;
  jobs.reserve(params.size());
  for (const auto& p : params) {
    jobs.push_back(std::async(std::launch::async, [&model, &p, &t_grid, &cfg] {
      return sample(solve(model, p, cfg), t_grid);
    }));
  }
  std::vector<std::vector<Vector>> out;
  out.reserve(params.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

// Neville extrapolation to eps -> 0 of values with error expansion in eps^2.
FdResult extrapolate(std::vector<std::vector<Vector>> levels, const std::vector<double>& steps, bool richardson) {
  FdResult res;
  res.steps = steps;
  const std::size_t K = levels.size();
  const std::size_t m = levels.front().size();
  res.values.resize(m);
  res.error.assign(m, 0.0);

  std::vector<double> delta(K, 0.0);
  double scale = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      scale = std::max(scale, inf_norm(levels[k][i]));
      if (k > 0) delta[k] = std::max(delta[k], inf_norm(levels[k][i] - levels[k - 1][i]));
    }
  }
  const double floor = 1e-12 * (1.0 + scale);
  for (std::size_t k = 2; k < K; ++k) {
    if (delta[k] > delta[k - 1] && delta[k] > floor) res.conditioning_warning = true;
  }

  for (std::size_t i = 0; i < m; ++i) {
    if (!richardson || K == 1) {
      res.values[i] = levels[K - 1][i];
      res.error[i] = K > 1 ? inf_norm(levels[K - 1][i] - levels[K - 2][i]) : 0.0;
    } else {
      std::vector<std::vector<Vector>> T(K);
      for (std::size_t k = 0; k < K; ++k) {
        T[k].push_back(levels[k][i]);
        for (std::size_t j = 1; j <= k; ++j) {
          const double ratio = steps[k - j] / steps[k];
          T[k].push_back(T[k][j - 1] + (T[k][j - 1] - T[k - 1][j - 1]) / (ratio * ratio - 1.0));
        }
      }
      res.values[i] = T[K - 1][K - 1];
      res.error[i] = inf_norm(T[K - 1][K - 1] - T[K - 2][K - 2]);
    }
    res.max_error = std::max(res.max_error, res.error[i]);
  }
  res.levels = std::move(levels);
  return res;
}

FdResult zero_result(const ModelSpec& model, const std::vector<double>& t_grid, std::size_t K) {
  FdResult res;
  const Vector z = Vector::Zero(static_cast<Eigen::Index>(model.n()));
  res.values.assign(t_grid.size(), z);
  res.error.assign(t_grid.size(), 0.0);
  res.steps.assign(K, 0.0);
  res.levels.assign(K, res.values);
  return res;
}

}  // namespace

FdResult fd_first(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                  const std::vector<double>& t_grid, const FdSchedule& sched, const SolveConfig& cfg) {
  check_schedule(sched);
  const std::size_t K = sched.eps_list.size();
  const double hn = gamma_norm(h);
  if (hn == 0.0) return zero_result(model, t_grid, K);
  const double base = (gamma_norm(gamma) + 1.0) / hn;

  std::vector<double> steps;
  std::vector<Parameter> params;
  for (double e : sched.eps_list) {
    const double s = e * base;
    steps.push_back(s);
    params.push_back(add(gamma, combine(s, h, 0.0, h)));
    params.push_back(add(gamma, combine(-s, h, 0.0, h)));
  }
  const auto samples = solve_all(model, params, t_grid, cfg);
  std::vector<std::vector<Vector>> levels(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      levels[k].push_back((samples[2 * k][i] - samples[2 * k + 1][i]) / (2.0 * steps[k]));
    }
  }
  return extrapolate(std::move(levels), steps, sched.richardson);
}

namespace {

std::vector<Vector> mixed_difference(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                                     const Direction& y, const std::vector<double>& t_grid, double eh, double ey,
                                     const SolveConfig& cfg) {
  std::vector<Parameter> params;
  for (const auto& [s, sp] : {std::pair{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}}) {
    params.push_back(add(gamma, combine(s * eh, h, sp * ey, y)));
  }
  const auto T = solve_all(model, params, t_grid, cfg);
  const double denom = 4.0 * (eh * ey);
  std::vector<Vector> out;
  out.reserve(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    out.push_back(((T[0][i] + T[1][i]) - (T[2][i] + T[3][i])) / denom);
  }
  return out;
}

}  // namespace

std::vector<Vector> fd_second(const ModelSpec& model, const Parameter& gamma, const Direction& h, const Direction& y,
                              const std::vector<double>& t_grid, double eps, const SolveConfig& cfg) {
  if (!(eps > 0.0)) throw DomainError("fd_second: eps must be positive");
  const double hn = gamma_norm(h), yn = gamma_norm(y);
  if (hn == 0.0 || yn == 0.0) return zero_result(model, t_grid, 1).values;
  const double base = gamma_norm(gamma) + 1.0;
  return mixed_difference(model, gamma, h, y, t_grid, eps * base / hn, eps * base / yn, cfg);
}

FdResult fd_second_extrapolated(const ModelSpec& model, const Parameter& gamma, const Direction& h,
                                const Direction& y, const std::vector<double>& t_grid, const FdSchedule& sched,
                                const SolveConfig& cfg) {
  check_schedule(sched);
  const std::size_t K = sched.eps_list.size();
  const double hn = gamma_norm(h), yn = gamma_norm(y);
  if (hn == 0.0 || yn == 0.0) return zero_result(model, t_grid, K);
  const double base = gamma_norm(gamma) + 1.0;
  std::vector<std::vector<Vector>> levels;
  std::vector<double> steps;
  for (double e : sched.eps_list) {
    steps.push_back(e);
    levels.push_back(mixed_difference(model, gamma, h, y, t_grid, e * base / hn, e * base / yn, cfg));
  }
  return extrapolate(std::move(levels), steps, sched.richardson);
}

std::string OrderReport::summary() const {
  std::ostringstream os;
  if (exact) {
    os << "exact";
    return os.str();
  }
  os << "order " << observed_order;
  for (const auto& d : degraded) os << "; degraded on [" << d.a << ", " << d.b << "] (order " << d.order << ")";
  return os.str();
}

OrderReport order_probe(const ModelSpec& model, const Parameter& gamma, const SolveConfig& cfg, int halvings,
                        int windows, double degraded_below) {
  if (halvings < 2) throw DomainError("order_probe: need at least two halvings");
  if (windows < 1) throw DomainError("order_probe: need at least one window");
  const double alpha = resolve_alpha(model, cfg);
  OrderReport rep;
  std::vector<SolveConfig> cfgs;
  for (int k = 0; k <= halvings; ++k) {
    SolveConfig c = cfg;
    c.step = cfg.step / std::ldexp(1.0, k);
    rep.steps.push_back(c.step);
    cfgs.push_back(c);
  }
  // sampled inside the finest steps; nodes alone hide the interpolant error
  const auto samples_per_step = 4;
  const auto count = static_cast<std::size_t>(std::ceil(alpha / rep.steps.back())) * samples_per_step;
  std::vector<double> grid(count + 1);
  for (std::size_t i = 0; i <= count; ++i) grid[i] = alpha * static_cast<double>(i) / static_cast<double>(count);

  std::vector<std::future<std::vector<Vector>>> jobs;
  for (const auto& c : cfgs) {
    jobs.push_back(std::async(std::launch::async, [&, c] { return sample(solve(model, gamma, c), grid); }));
  }
  std::vector<std::vector<Vector>> xs;
  for (auto& j : jobs) xs.push_back(j.get());

  double scale = 0.0;
  for (const auto& v : xs.back()) scale = std::max(scale, inf_norm(v));
  const double noise = 1e-14 * (1.0 + scale);

  const auto W = static_cast<std::size_t>(windows);
  std::vector<std::vector<double>> local(W, std::vector<double>(static_cast<std::size_t>(halvings), 0.0));
  for (int k = 0; k < halvings; ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = inf_norm(xs[static_cast<std::size_t>(k)][i] - xs[static_cast<std::size_t>(k) + 1][i]);
      d = std::max(d, e);
      const std::size_t w = std::min(W - 1, static_cast<std::size_t>(grid[i] / alpha * static_cast<double>(W)));
      local[w][static_cast<std::size_t>(k)] = std::max(local[w][static_cast<std::size_t>(k)], e);
    }
    rep.differences.push_back(d);
  }
  rep.exact = std::all_of(rep.differences.begin(), rep.differences.end(), [&](double d) { return d <= noise; });
  if (rep.exact) {
    rep.observed_order = std::numeric_limits<double>::infinity();
    return rep;
  }
  for (std::size_t k = 0; k + 1 < rep.differences.size(); ++k) {
    const double a = rep.differences[k], b = rep.differences[k + 1];
    rep.orders.push_back(b > noise ? std::log2(a / b) : std::numeric_limits<double>::infinity());
  }
  rep.observed_order = rep.orders.back();

  const auto last = static_cast<std::size_t>(halvings) - 2;
  for (std::size_t w = 0; w < W; ++w) {
    const double a = local[w][last], b = local[w][last + 1];
    if (a <= 100.0 * noise || b <= noise) continue;
    const double order = std::log2(a / b);
    if (order >= degraded_below) continue;
    const double lo = alpha * static_cast<double>(w) / static_cast<double>(W);
    const double hi = alpha * static_cast<double>(w + 1) / static_cast<double>(W);
    if (!rep.degraded.empty() && rep.degraded.back().b == lo) {
      rep.degraded.back().b = hi;
      rep.degraded.back().order = std::min(rep.degraded.back().order, order);
    } else {
      rep.degraded.push_back({lo, hi, order});
    }
  }
  return rep;
}

}  // namespace sdde
