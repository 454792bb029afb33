#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <iostream>
#include <optional>

#include "sdde/cli.hpp"
#include "sdde/lag.hpp"
#include "sdde/sens1.hpp"
#include "sdde/sens2.hpp"

namespace py = pybind11;
using namespace sdde;

namespace {

/// A parsed run configuration; the model is shared and immutable, parameters are editable.
struct Problem {
  cli::RunConfig cfg;

  [[nodiscard]] std::vector<double> times(const std::optional<std::vector<double>>& t, double alpha) const {
    return t ? *t : cli::output_times(cfg, alpha);
  }
};

/// curves sampled at times, shaped (curves, times, n).
py::array_t<double> stack(const std::vector<const Trajectory*>& curves, const std::vector<double>& times,
                          std::size_t n) {
  py::array_t<double> out({curves.size(), times.size(), n});
  auto a = out.mutable_unchecked<3>();
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Vector v = curves[c]->eval(times[i]);
      for (std::size_t k = 0; k < n; ++k) a(c, i, k) = v[static_cast<Eigen::Index>(k)];
    }
  }
  return out;
}

std::vector<Direction> directions_of(const std::vector<cli::NamedDirection>& named) {
  std::vector<Direction> out;
  for (const auto& d : named) out.push_back(d.direction);
  return out;
}

std::vector<std::string> names_of(const std::vector<cli::NamedDirection>& named) {
  std::vector<std::string> out;
  for (const auto& d : named) out.push_back(d.name);
  return out;
}

py::tuple solve_py(const Problem& p, const std::optional<std::vector<double>>& t) {
  Solution sol;
  {
    py::gil_scoped_release nogil;
    sol = solve_tracked(*p.cfg.model, p.cfg.gamma, p.cfg.solve);
  }
  const auto times = p.times(t, sol.alpha);
  auto x = stack({&sol.x}, times, p.cfg.model->n());
  return py::make_tuple(py::array(py::cast(times)), x[py::int_(0)]);
}

py::dict check_py(const Problem& p) {
  const ModelSpec& m = *p.cfg.model;
  const CompatReport c = check_compatibility(m, p.cfg.gamma, p.cfg.solve.compat_tol);
  PMReport pm;
  {
    py::gil_scoped_release nogil;
    const Trajectory x = solve(m, p.cfg.gamma, p.cfg.solve);
    pm = check_pm(m, p.cfg.gamma, x, p.cfg.pm_cells, p.cfg.slope_floor);
  }
  py::dict d;
  d["compatible"] = c.compatible;
  d["compat_residual"] = c.residual;
  d["is_pm"] = pm.is_pm;
  d["is_p1"] = pm.is_p1;
  d["sign_changes"] = pm.sign_changes;
  d["mesh"] = pm.mesh;
  d["increasing"] = std::vector<bool>(pm.increasing);
  return d;
}

py::tuple sens_py(const Problem& p, const std::optional<std::vector<double>>& t) {
  const auto named = cli::run_directions(p.cfg);
  Solution sol;
  std::vector<FirstVariation> z;
  {
    py::gil_scoped_release nogil;
    sol = solve_tracked(*p.cfg.model, p.cfg.gamma, p.cfg.solve);
    SensOptions opts;
    opts.pm_cells = p.cfg.pm_cells;
    z = first_variations(*p.cfg.model, p.cfg.gamma, sol, directions_of(named), p.cfg.solve, opts);
  }
  std::vector<const Trajectory*> curves;
  bool unverified = false;
  for (const auto& v : z) {
    curves.push_back(&v.z);
    unverified = unverified || v.hypothesis_unverified;
  }
  const auto times = p.times(t, sol.alpha);
  return py::make_tuple(names_of(named), py::array(py::cast(times)), stack(curves, times, p.cfg.model->n()),
                        unverified);
}

py::tuple sens2_py(const Problem& p, const std::optional<std::vector<double>>& t) {
  const auto named = cli::run_directions(p.cfg);
  Solution sol;
  std::vector<std::vector<SecondVariation>> w;
  {
    py::gil_scoped_release nogil;
    sol = solve_tracked(*p.cfg.model, p.cfg.gamma, p.cfg.solve);
    SensOptions opts;
    opts.pm_cells = p.cfg.pm_cells;
    w = hessian_tensor(*p.cfg.model, p.cfg.gamma, sol, directions_of(named), p.cfg.solve, opts);
  }
  const auto times = p.times(t, sol.alpha);
  const std::size_t k = named.size(), n = p.cfg.model->n();
  py::array_t<double> out({k, k, times.size(), n});
  auto a = out.mutable_unchecked<4>();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t s = 0; s < times.size(); ++s) {
        const Vector v = w[i][j].w.eval(times[s]);
        for (std::size_t c = 0; c < n; ++c) a(i, j, s, c) = v[static_cast<Eigen::Index>(c)];
      }
    }
  }
  return py::make_tuple(names_of(named), py::array(py::cast(times)), out);
}

py::array_t<double> fd_first_py(const Problem& p, const std::string& name, const std::vector<double>& times) {
  const auto named = cli::run_directions(p.cfg);
  for (const auto& d : named) {
    if (d.name != name) continue;
    FdResult r;
    {
      py::gil_scoped_release nogil;
      r = fd_first(*p.cfg.model, p.cfg.gamma, d.direction, times, p.cfg.fd, p.cfg.solve);
    }
    py::array_t<double> out({times.size(), p.cfg.model->n()});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < times.size(); ++i) {
      for (std::size_t c = 0; c < p.cfg.model->n(); ++c) a(i, c) = r.values[i][static_cast<Eigen::Index>(c)];
    }
    return out;
  }
  throw py::key_error("no direction named '" + name + "'");
}

py::dict fit_py(Problem& p, const std::vector<double>& t, const Matrix& x, const std::optional<std::vector<double>>& w,
                const std::optional<std::vector<std::size_t>>& theta, const std::optional<std::vector<std::size_t>>& xi) {
  const ModelSpec& m = *p.cfg.model;
  if (static_cast<std::size_t>(x.rows()) != t.size() || static_cast<std::size_t>(x.cols()) != m.n()) {
    throw py::value_error("x must have shape (len(t), n)");
  }
  ObservationSet obs;
  for (std::size_t i = 0; i < t.size(); ++i) {
    obs.samples.push_back({t[i], x.row(static_cast<Eigen::Index>(i)).transpose(), w ? w->at(i) : 1.0});
  }
  FitMask mask = p.cfg.fit_mask_set ? p.cfg.fit_mask : FitMask::all_theta(m);
  if (theta) mask.theta = *theta;
  if (xi) mask.xi = *xi;
  FitResult r;
  {
    py::gil_scoped_release nogil;
    r = gauss_newton_fit(m, p.cfg.gamma, obs, mask, p.cfg.fit);
  }
  py::dict d;
  d["theta"] = Vector(r.gamma.theta);
  d["xi"] = Vector(r.gamma.xi);
  d["history"] = r.history;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["singular_values"] = r.singular_values;
  return d;
}

py::dict validate_py(const Problem& p) {
  const ValidationReport rep =
      validate_model(*p.cfg.model, p.cfg.validate_probes, p.cfg.validate_tol, p.cfg.validate_radius);
  py::dict d;
  for (const auto& c : rep.checks) d[py::str(c.name)] = py::make_tuple(c.max_mismatch, c.passed);
  d["passed"] = rep.passed;
  return d;
}

int run_py(const std::vector<std::string>& args) {
  std::vector<std::string> all{"sdde"};
  all.insert(all.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : all) argv.push_back(a.c_str());
  py::scoped_ostream_redirect out(std::cout, py::module_::import("sys").attr("stdout"));
  py::scoped_estream_redirect err(std::cerr, py::module_::import("sys").attr("stderr"));
  return cli::run(static_cast<int>(argv.size()), argv.data(), std::cout, std::cerr);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Solver and parameter sensitivities for delay equations with state-dependent delay.";

  auto base = py::register_exception<Error>(m, "SddeError", PyExc_RuntimeError);
  py::register_exception<HypothesisError>(m, "HypothesisError", base.ptr());
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Problem>(m, "Problem")
      .def_static(
          "from_yaml", [](const std::string& text, const std::string& base) { return Problem{cli::parse_config(text, base)}; },
          py::arg("text"), py::arg("base_dir") = "")
      .def_static(
          "load", [](const std::string& path) { return Problem{cli::load_config(path)}; }, py::arg("path"))
      .def_property_readonly("n", [](const Problem& p) { return p.cfg.model->n(); })
      .def_property_readonly("p", [](const Problem& p) { return p.cfg.model->p(); })
      .def_property_readonly("q", [](const Problem& p) { return p.cfg.model->q(); })
      .def_property_readonly("r", [](const Problem& p) { return p.cfg.model->r(); })
      .def_property_readonly("horizon", [](const Problem& p) { return p.cfg.model->horizon(); })
      .def_property(
          "theta", [](const Problem& p) { return Vector(p.cfg.gamma.theta); },
          [](Problem& p, const Vector& v) {
            if (v.size() != p.cfg.gamma.theta.size()) throw py::value_error("theta has the wrong size");
            p.cfg.gamma.theta = v;
          })
      .def_property(
          "xi", [](const Problem& p) { return Vector(p.cfg.gamma.xi); },
          [](Problem& p, const Vector& v) {
            if (v.size() != p.cfg.gamma.xi.size()) throw py::value_error("xi has the wrong size");
            p.cfg.gamma.xi = v;
          })
      .def_property(
          "step", [](const Problem& p) { return p.cfg.solve.step; },
          [](Problem& p, double h) {
            if (!(h > 0.0)) throw py::value_error("step must be positive");
            p.cfg.solve.step = h;
          })
      .def_property_readonly("directions", [](const Problem& p) { return names_of(cli::run_directions(p.cfg)); })
      .def("phi", [](const Problem& p, double s) { return Vector(p.cfg.gamma.phi.eval(s)); }, py::arg("s"))
      .def("solve", &solve_py, py::arg("times") = py::none(), "(t, x) with x of shape (len(t), n)")
      .def("check", &check_py, "compatibility and lag monotonicity")
      .def("sens", &sens_py, py::arg("times") = py::none(),
           "(names, t, z, unverified) with z of shape (directions, len(t), n)")
      .def("sens2", &sens2_py, py::arg("times") = py::none(),
           "(names, t, w) with w of shape (directions, directions, len(t), n)")
      .def("fd_first", &fd_first_py, py::arg("direction"), py::arg("times"))
      .def("fit", &fit_py, py::arg("t"), py::arg("x"), py::arg("weights") = py::none(),
           py::arg("free_theta") = py::none(), py::arg("free_xi") = py::none())
      .def("validate", &validate_py);

  m.def("run", &run_py, py::arg("args"), "Run the sdde command line with the given arguments; returns the exit code.");
}
