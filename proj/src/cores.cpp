#include "sdde/cores.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sdde/errors.hpp"

namespace sdde::cores {

namespace {

Matrix zeros_grad(std::size_t outputs, std::size_t arity) {
  return Matrix::Zero(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(arity));
}

std::vector<Matrix> zeros_hess(std::size_t outputs, std::size_t arity) {
  const auto a = static_cast<Eigen::Index>(arity);
  return std::vector<Matrix>(outputs, Matrix::Zero(a, a));
}

void need_psi(std::size_t psi, const char* name) {
  if (psi < 1) throw DomainError(std::string(name) + " core reads psi_0 and needs at least one history argument");
}

void need_q(std::size_t q, std::size_t at_least, const char* name) {
  if (q < at_least) throw DomainError(std::string(name) + " core needs xi of dimension >= " + std::to_string(at_least));
}

}  // namespace

SmoothCore linear(std::size_t n, std::size_t psi) {
  const std::size_t arity = psi + n + n * n;
  const auto N = static_cast<Eigen::Index>(n);
  const auto u0 = static_cast<Eigen::Index>(psi);
  const auto t0 = static_cast<Eigen::Index>(psi + n);
  SmoothCore core;
  core.name = "linear";
  core.arity = arity;
  core.outputs = n;
  core.eval = [=](double, const Vector& a) -> Vector {
    Vector out(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < N; ++j) s += a[t0 + i * N + j] * a[u0 + j];
      out[i] = s;
    }
    return out;
  };
  core.grad = [=](double, const Vector& a) -> Matrix {
    Matrix g = zeros_grad(n, arity);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        g(i, u0 + j) = a[t0 + i * N + j];
        g(i, t0 + i * N + j) = a[u0 + j];
      }
    }
    return g;
  };
  core.hess = [=](double, const Vector&) -> std::vector<Matrix> {
    auto h = zeros_hess(n, arity);
    for (Eigen::Index i = 0; i < N; ++i) {
      for (Eigen::Index j = 0; j < N; ++j) {
        h[static_cast<std::size_t>(i)](u0 + j, t0 + i * N + j) = 1.0;
        h[static_cast<std::size_t>(i)](t0 + i * N + j, u0 + j) = 1.0;
      }
    }
    return h;
  };
  return core;
}

SmoothCore logistic(std::size_t psi) {
  need_psi(psi, "logistic");
  const std::size_t arity = psi + 3;
  const auto ia = Eigen::Index{0};
  const auto ib = static_cast<Eigen::Index>(psi);
  const auto ic = ib + 1, id = ib + 2;
  SmoothCore core;
  core.name = "logistic";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [=](double, const Vector& x) -> Vector {
    Vector out(1);
    out[0] = x[ic] * x[ia] * (1.0 - x[ib] / x[id]);
    return out;
  };
  core.grad = [=](double, const Vector& x) -> Matrix {
    const double a = x[ia], b = x[ib], c = x[ic], d = x[id];
    Matrix g = zeros_grad(1, arity);
    g(0, ia) = c * (1.0 - b / d);
    g(0, ib) = -c * a / d;
    g(0, ic) = a * (1.0 - b / d);
    g(0, id) = c * a * b / (d * d);
    return g;
  };
  core.hess = [=](double, const Vector& x) -> std::vector<Matrix> {
    const double a = x[ia], b = x[ib], c = x[ic], d = x[id];
    auto hv = zeros_hess(1, arity);
    Matrix& h = hv[0];
    auto set = [&](Eigen::Index i, Eigen::Index j, double v) { h(i, j) = h(j, i) = v; };
    set(ia, ib, -c / d);
    set(ia, ic, 1.0 - b / d);
    set(ia, id, c * b / (d * d));
    set(ib, ic, -a / d);
    set(ib, id, c * a / (d * d));
    set(ic, id, a * b / (d * d));
    set(id, id, -2.0 * c * a * b / (d * d * d));
    return hv;
  };
  return core;
}

SmoothCore quadratic(Vector c, Matrix L, std::vector<Matrix> Q) {
  const auto outputs = static_cast<std::size_t>(c.size());
  const auto arity = static_cast<std::size_t>(L.cols());
  if (static_cast<std::size_t>(L.rows()) != outputs) throw DomainError("quadratic core: L must have one row per output");
  std::vector<Matrix> S(outputs, Matrix::Zero(L.cols(), L.cols()));
  if (!Q.empty()) {
    if (Q.size() != outputs) throw DomainError("quadratic core: Q needs one matrix per output");
    for (std::size_t o = 0; o < outputs; ++o) {
      if (Q[o].rows() != L.cols() || Q[o].cols() != L.cols()) throw DomainError("quadratic core: Q has the wrong shape");
      S[o] = 0.5 * (Q[o] + Q[o].transpose());
    }
  }
  SmoothCore core;
  core.name = "quadratic";
  core.arity = arity;
  core.outputs = outputs;
  core.eval = [c, L, S](double, const Vector& a) -> Vector {
    Vector out = c + L * a;
    for (std::size_t o = 0; o < S.size(); ++o) out[static_cast<Eigen::Index>(o)] += 0.5 * a.dot(S[o] * a);
    return out;
  };
  core.grad = [L, S](double, const Vector& a) -> Matrix {
    Matrix g = L;
    for (std::size_t o = 0; o < S.size(); ++o) g.row(static_cast<Eigen::Index>(o)) += (S[o] * a).transpose();
    return g;
  };
  core.hess = [S](double, const Vector&) { return S; };
  return core;
}

SmoothCore constant_delay(double value, std::size_t psi, std::size_t q) {
  const std::size_t arity = psi + q;
  SmoothCore core;
  core.name = "constant";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [value](double, const Vector&) { return Vector::Constant(1, value); };
  core.grad = [arity](double, const Vector&) { return zeros_grad(1, arity); };
  core.hess = [arity](double, const Vector&) { return zeros_hess(1, arity); };
  return core;
}

SmoothCore tanh_delay(std::size_t psi, std::size_t q) {
  need_psi(psi, "tanh");
  need_q(q, 2, "tanh");
  const std::size_t arity = psi + q;
  const auto x1 = static_cast<Eigen::Index>(psi), x2 = x1 + 1;
  SmoothCore core;
  core.name = "tanh";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [=](double, const Vector& a) { return Vector::Constant(1, a[x1] + a[x2] * std::tanh(a[0])); };
  core.grad = [=](double, const Vector& a) -> Matrix {
    const double th = std::tanh(a[0]), s2 = 1.0 - th * th;
    Matrix g = zeros_grad(1, arity);
    g(0, 0) = a[x2] * s2;
    g(0, x1) = 1.0;
    g(0, x2) = th;
    return g;
  };
  core.hess = [=](double, const Vector& a) -> std::vector<Matrix> {
    const double th = std::tanh(a[0]), s2 = 1.0 - th * th;
    auto h = zeros_hess(1, arity);
    h[0](0, 0) = -2.0 * a[x2] * th * s2;
    h[0](0, x2) = h[0](x2, 0) = s2;
    return h;
  };
  return core;
}

SmoothCore rational_delay(std::size_t psi, std::size_t q) {
  need_psi(psi, "rational");
  need_q(q, 1, "rational");
  const std::size_t arity = psi + q;
  const auto x1 = static_cast<Eigen::Index>(psi);
  SmoothCore core;
  core.name = "rational";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [=](double, const Vector& a) { return Vector::Constant(1, a[x1] / (1.0 + a[0] * a[0])); };
  core.grad = [=](double, const Vector& a) -> Matrix {
    const double d = 1.0 + a[0] * a[0];
    Matrix g = zeros_grad(1, arity);
    g(0, 0) = -2.0 * a[0] * a[x1] / (d * d);
    g(0, x1) = 1.0 / d;
    return g;
  };
  core.hess = [=](double, const Vector& a) -> std::vector<Matrix> {
    const double d = 1.0 + a[0] * a[0];
    auto h = zeros_hess(1, arity);
    h[0](0, 0) = a[x1] * (6.0 * a[0] * a[0] - 2.0) / (d * d * d);
    h[0](0, x1) = h[0](x1, 0) = -2.0 * a[0] / (d * d);
    return h;
  };
  return core;
}

SmoothCore sinusoid_delay(double mean, double amplitude, double frequency, std::size_t psi, std::size_t q) {
  const std::size_t arity = psi + q;
  const double w = 2.0 * std::numbers::pi * frequency;
  SmoothCore core;
  core.name = "sinusoid";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [=](double t, const Vector&) { return Vector::Constant(1, mean + amplitude * std::sin(w * t)); };
  core.grad = [arity](double, const Vector&) { return zeros_grad(1, arity); };
  core.hess = [arity](double, const Vector&) { return zeros_hess(1, arity); };
  core.time_partial = [=](double t, const Vector&) { return Vector::Constant(1, amplitude * w * std::cos(w * t)); };
  return core;
}

SmoothCore parameter_delay(std::size_t psi, std::size_t q) {
  need_q(q, 1, "parameter");
  const std::size_t arity = psi + q;
  const auto x1 = static_cast<Eigen::Index>(psi);
  SmoothCore core;
  core.name = "parameter";
  core.arity = arity;
  core.outputs = 1;
  core.eval = [=](double, const Vector& a) { return Vector::Constant(1, a[x1]); };
  core.grad = [=](double, const Vector&) -> Matrix {
    Matrix g = zeros_grad(1, arity);
    g(0, x1) = 1.0;
    return g;
  };
  core.hess = [arity](double, const Vector&) { return zeros_hess(1, arity); };
  return core;
}

PointLag constant_lag(double value) {
  return PointLag{[value](double) { return value; }, [](double) { return 0.0; }};
}

PointLag sine_lag(double mean, double amplitude, double frequency) {
  const double w = 2.0 * std::numbers::pi * frequency;
  return PointLag{[=](double t) { return mean + amplitude * std::sin(w * t); },
                  [=](double t) { return amplitude * w * std::cos(w * t); }};
}

Kernel constant_kernel(Matrix M, int nodes) {
  Kernel k;
  k.rows = static_cast<std::size_t>(M.rows());
  k.nodes = nodes;
  k.value = [M](double, double) { return M; };
  k.time_partial = [M](double, double) -> Matrix { return Matrix::Zero(M.rows(), M.cols()); };
  return k;
}

Kernel exponential_kernel(Matrix M, double rate, int nodes) {
  Kernel k;
  k.rows = static_cast<std::size_t>(M.rows());
  k.nodes = nodes;
  k.value = [M, rate](double, double z) -> Matrix { return M * std::exp(rate * z); };
  k.time_partial = [M](double, double) -> Matrix { return Matrix::Zero(M.rows(), M.cols()); };
  return k;
}

}  // namespace sdde::cores
