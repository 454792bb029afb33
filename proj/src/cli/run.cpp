#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "sdde/cli.hpp"
#include "sdde/lag.hpp"
#include "sdde/sens1.hpp"
#include "sdde/sens2.hpp"

namespace sdde::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

struct Report {
  explicit Report(std::string c = {}) : command(std::move(c)) {}
  std::string command;
  Json meta = Json::object();
  std::vector<Table> tables;
  int code = Exit::ok;
};

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string cell(const Json& j) {
  if (j.is_number_float()) return number(j.get<double>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return j.dump();
}

void emit_csv(const Report& r, std::ostream& os) {
  os << "# command: " << r.command << "\n";
  for (const auto& [k, v] : r.meta.items()) os << "# " << k << ": " << v.dump() << "\n";
  bool first = true;
  for (const auto& t : r.tables) {
    if (!first) os << "\n";
    first = false;
    os << "# table: " << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell(row[i]);
      os << "\n";
    }
  }
}

void emit_json(const Report& r, std::ostream& os) {
  Json doc;
  doc["command"] = r.command;
  doc["meta"] = r.meta;
  Json tables = Json::object();
  for (const auto& t : r.tables) tables[t.name] = Json{{"columns", t.columns}, {"rows", t.rows}};
  doc["tables"] = tables;
  os << doc.dump(2) << "\n";
}

Json vec_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

std::vector<std::string> component_names(const std::string& prefix, std::size_t n) {
  if (n == 1) return {prefix};
  std::vector<std::string> out;
  for (std::size_t c = 0; c < n; ++c) out.push_back(prefix + "[" + std::to_string(c + 1) + "]");
  return out;
}

/// Column t followed by the components of every curve, sampled at times.
Table sample_table(const std::string& name, const std::vector<std::string>& labels,
                   const std::vector<const Trajectory*>& curves, const std::vector<double>& times, std::size_t n) {
  Table t{name, {"t"}, {}};
  for (const auto& l : labels) {
    for (auto& c : component_names(l, n)) t.columns.push_back(std::move(c));
  }
  for (double s : times) {
    std::vector<Json> row{s};
    for (const auto* c : curves) {
      const Vector v = c->eval(s);
      for (Eigen::Index k = 0; k < v.size(); ++k) row.emplace_back(v[k]);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

double max_deviation(const Trajectory& a, const std::vector<Vector>& b, const std::vector<double>& times) {
  double m = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) m = std::max(m, (a.eval(times[i]) - b[i]).lpNorm<Eigen::Infinity>());
  return m;
}

/// PM check of the lag, reported into meta; false when not piecewise monotone or unresolved.
bool lag_monotone(const RunConfig& cfg, const Solution& sol, Json& meta) {
  try {
    const PMReport pm = check_pm(*cfg.model, cfg.gamma, sol.x, cfg.pm_cells, cfg.slope_floor);
    meta["is_pm"] = pm.is_pm;
    meta["lag_pieces"] = pm.pieces();
    return pm.is_pm;
  } catch (const ResolutionError& e) {
    meta["is_pm"] = false;
    meta["pm_error"] = e.what();
    return false;
  }
}

bool compatible(const RunConfig& cfg, Json& meta) {
  const CompatReport c = check_compatibility(*cfg.model, cfg.gamma, cfg.solve.compat_tol);
  meta["compatible"] = c.compatible;
  meta["compat_residual"] = c.residual;
  return c.compatible;
}

Report cmd_solve(const RunConfig& cfg, const std::string& trajectory_path) {
  Report r{"solve"};
  const Solution sol = solve_tracked(*cfg.model, cfg.gamma, cfg.solve);
  r.meta["alpha"] = sol.alpha;
  r.meta["step"] = cfg.solve.step;
  r.meta["pieces"] = sol.x.pieces();
  r.meta["crossings"] = sol.crossings;
  Json bps = Json::array();
  for (const auto& b : sol.breakpoints) bps.push_back(b.time);
  r.meta["breakpoints"] = bps;
  r.tables.push_back(sample_table("solution", {"x"}, {&sol.x}, output_times(cfg, sol.alpha), cfg.model->n()));
  if (!trajectory_path.empty()) {
    std::ofstream f(trajectory_path);
    if (!f) throw ConfigError("cannot write trajectory file", trajectory_path, 0);
    sol.x.write(f);
  }
  return r;
}

Report cmd_check(const RunConfig& cfg) {
  Report r{"check"};
  const CompatReport c = check_compatibility(*cfg.model, cfg.gamma, cfg.solve.compat_tol);
  r.meta["compatible"] = c.compatible;
  r.meta["compat_residual"] = c.residual;
  r.meta["compat_tol"] = c.tol;
  r.meta["phi_slope_at_0"] = vec_json(c.lhs);
  r.meta["f_at_0"] = vec_json(c.rhs);
  const Solution sol = solve_tracked(*cfg.model, cfg.gamma, cfg.solve);
  const PMReport pm = check_pm(*cfg.model, cfg.gamma, sol.x, cfg.pm_cells, cfg.slope_floor);
  r.meta["is_pm"] = pm.is_pm;
  r.meta["is_p1"] = pm.is_p1;
  r.meta["sign_changes"] = pm.sign_changes;
  r.meta["cells"] = pm.cells;
  r.meta["slope_floor"] = pm.slope_floor;
  Table t{"lag_pieces", {"start", "end", "increasing", "min_abs_slope"}, {}};
  for (std::size_t i = 0; i < pm.pieces(); ++i) {
    t.rows.push_back({pm.mesh[i], pm.mesh[i + 1], static_cast<bool>(pm.increasing[i]), pm.min_abs_slope[i]});
  }
  r.tables.push_back(std::move(t));
  if (!c.compatible || !pm.is_pm) r.code = Exit::hypothesis;
  return r;
}

Report cmd_sens(const RunConfig& cfg) {
  Report r{"sens"};
  const Solution sol = solve_tracked(*cfg.model, cfg.gamma, cfg.solve);
  if (!lag_monotone(cfg, sol, r.meta)) r.code = Exit::hypothesis;
  const auto named = run_directions(cfg);
  std::vector<Direction> dirs;
  std::vector<std::string> labels;
  for (const auto& d : named) {
    dirs.push_back(d.direction);
    labels.push_back("z:" + d.name);
  }
  SensOptions opts;
  opts.verify_pm = false;
  const auto z = first_variations(*cfg.model, cfg.gamma, sol, dirs, cfg.solve, opts);
  std::vector<const Trajectory*> curves;
  bool tie = false;
  for (const auto& v : z) {
    curves.push_back(&v.z);
    tie = tie || v.tie;
  }
  r.meta["alpha"] = sol.alpha;
  r.meta["tie"] = tie;
  r.tables.push_back(sample_table("sensitivity", labels, curves, output_times(cfg, sol.alpha), cfg.model->n()));
  return r;
}

Report cmd_sens2(const RunConfig& cfg) {
  Report r{"sens2"};
  if (!compatible(cfg, r.meta)) {
    r.code = Exit::hypothesis;
    return r;
  }
  const Solution sol = solve_tracked(*cfg.model, cfg.gamma, cfg.solve);
  if (!lag_monotone(cfg, sol, r.meta)) r.code = Exit::hypothesis;
  const auto named = run_directions(cfg);
  std::vector<Direction> basis;
  for (const auto& d : named) basis.push_back(d.direction);
  SensOptions opts;
  opts.verify_pm = false;
  const auto w = hessian_tensor(*cfg.model, cfg.gamma, sol, basis, cfg.solve, opts);
  std::vector<std::string> labels;
  std::vector<const Trajectory*> curves;
  for (std::size_t i = 0; i < named.size(); ++i) {
    for (std::size_t j = i; j < named.size(); ++j) {
      labels.push_back("w:" + named[i].name + "*" + named[j].name);
      curves.push_back(&w[i][j].w);
    }
  }
  r.meta["alpha"] = sol.alpha;
  r.tables.push_back(sample_table("second_order", labels, curves, output_times(cfg, sol.alpha), cfg.model->n()));
  return r;
}

Report cmd_fd_verify(const RunConfig& cfg) {
  Report r{"fd-verify"};
  const Solution sol = solve_tracked(*cfg.model, cfg.gamma, cfg.solve);
  if (!lag_monotone(cfg, sol, r.meta)) r.code = Exit::hypothesis;
  const auto named = run_directions(cfg);
  const auto times = output_times(cfg, sol.alpha);
  std::vector<Direction> dirs;
  for (const auto& d : named) dirs.push_back(d.direction);
  SensOptions opts;
  opts.verify_pm = false;
  const auto z = first_variations(*cfg.model, cfg.gamma, sol, dirs, cfg.solve, opts);
  Table t1{"first_order", {"direction", "max_deviation", "fd_error", "sup_z"}, {}};
  double worst1 = 0.0;
  for (std::size_t i = 0; i < named.size(); ++i) {
    const FdResult fd = fd_first(*cfg.model, cfg.gamma, dirs[i], times, cfg.fd, cfg.solve);
    const double dev = max_deviation(z[i].z, fd.values, times);
    worst1 = std::max(worst1, dev);
    t1.rows.push_back({named[i].name, dev, fd.max_error, z[i].sup_norm});
  }
  r.meta["max_first_deviation"] = worst1;
  r.tables.push_back(std::move(t1));
  if (!cfg.fd_second) return r;

  if (!compatible(cfg, r.meta)) {
    r.code = Exit::hypothesis;
    return r;
  }
  const auto w = hessian_tensor(*cfg.model, cfg.gamma, sol, dirs, cfg.solve, opts);
  Table t2{"second_order", {"pair", "max_deviation", "fd_error", "sup_w"}, {}};
  double worst2 = 0.0;
  for (std::size_t i = 0; i < named.size(); ++i) {
    for (std::size_t j = i; j < named.size(); ++j) {
      const FdResult fd = fd_second_extrapolated(*cfg.model, cfg.gamma, dirs[i], dirs[j], times, cfg.fd, cfg.solve);
      const double dev = max_deviation(w[i][j].w, fd.values, times);
      worst2 = std::max(worst2, dev);
      t2.rows.push_back({named[i].name + "*" + named[j].name, dev, fd.max_error, sup_norm(w[i][j].w)});
    }
  }
  r.meta["max_second_deviation"] = worst2;
  r.tables.push_back(std::move(t2));
  return r;
}

Report cmd_fit(const RunConfig& cfg) {
  Report r{"fit"};
  if (cfg.observations.empty()) throw ConfigError("missing value", "fit.observations", 0);
  const ModelSpec& m = *cfg.model;
  const ObservationSet obs = read_observations(cfg.observations, m.n());
  const FitMask mask = cfg.fit_mask_set ? cfg.fit_mask : FitMask::all_theta(m);
  const FitResult res = gauss_newton_fit(m, cfg.gamma, obs, mask, cfg.fit);
  r.meta["observations"] = obs.samples.size();
  r.meta["converged"] = res.converged;
  r.meta["iterations"] = res.iterations;
  if (!res.history.empty()) {
    r.meta["initial_cost"] = res.history.front();
    r.meta["final_cost"] = res.history.back();
  }
  r.meta["singular_values"] = res.singular_values;
  Table h{"history", {"iteration", "cost"}, {}};
  for (std::size_t i = 0; i < res.history.size(); ++i) h.rows.push_back({i, res.history[i]});
  Table p{"parameters", {"name", "value", "free"}, {}};
  auto has = [](const std::vector<std::size_t>& v, std::size_t k) {
    return std::find(v.begin(), v.end(), k) != v.end();
  };
  for (Eigen::Index i = 0; i < res.gamma.theta.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    p.rows.push_back({"theta" + std::to_string(k + 1), res.gamma.theta[i], has(mask.theta, k)});
  }
  for (Eigen::Index i = 0; i < res.gamma.xi.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    p.rows.push_back({"xi" + std::to_string(k + 1), res.gamma.xi[i], has(mask.xi, k)});
  }
  const Trajectory& phi = res.gamma.phi;
  for (std::size_t idx : mask.phi) {
    const std::size_t knot = idx / 2 / m.n(), comp = idx / 2 % m.n();
    const bool slope = idx % 2 == 1;
    double v = 0.0;
    if (!slope) {
      v = phi.knot_value(knot)[static_cast<Eigen::Index>(comp)];
    } else {
      v = (knot < phi.pieces() ? phi.piece_d_start(knot) : phi.piece_d_end(knot - 1))[static_cast<Eigen::Index>(comp)];
    }
    p.rows.push_back({"phi[" + std::to_string(idx) + "]", v, true});
  }
  r.tables.push_back(std::move(h));
  r.tables.push_back(std::move(p));
  return r;
}

Report cmd_validate(const RunConfig& cfg) {
  Report r{"validate"};
  const ValidationReport rep = validate_model(*cfg.model, cfg.validate_probes, cfg.validate_tol, cfg.validate_radius);
  r.meta["passed"] = rep.passed;
  r.meta["probes"] = cfg.validate_probes;
  r.meta["tol"] = cfg.validate_tol;
  Table t{"checks", {"name", "max_mismatch", "scale", "passed"}, {}};
  for (const auto& c : rep.checks) t.rows.push_back({c.name, c.max_mismatch, c.scale, c.passed});
  r.tables.push_back(std::move(t));
  if (!rep.passed) r.code = Exit::hypothesis;
  return r;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solver and parameter sensitivities for delay equations with state-dependent delay."};
  app.name("sdde");
  app.require_subcommand(1);
  std::string config_path, format, output, trajectory;

  std::string cores = "f cores:";
  for (const auto& c : f_core_names()) cores += " " + c;
  cores += "; tau cores:";
  for (const auto& c : tau_core_names()) cores += " " + c;
  app.footer(cores + "\nExit codes: 0 success, 1 error, 2 hypothesis not satisfied.");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve", "integrate the model and tabulate x(t)"},
      {"check", "compatibility of the initial data and monotonicity of the lag"},
      {"sens", "first-order sensitivities along the configured directions"},
      {"sens2", "second-order sensitivities for every pair of directions"},
      {"fd-verify", "compare sensitivities with finite differences"},
      {"fit", "Gauss-Newton fit to observations"},
      {"validate", "cross-check the analytic partials of the model cores"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("config", config_path, "YAML run configuration")->required();
    sc->add_option("--format", format, "csv or json (overrides output.format)")->check(CLI::IsMember({"csv", "json"}));
    sc->add_option("-o,--output", output, "write the tables here (overrides output.path)");
    if (name == "solve") sc->add_option("--trajectory", trajectory, "also write the piecewise cubic solution");
    subs[name] = sc;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Exit::ok : Exit::failure;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!format.empty()) cfg.output.format = format;
    if (!output.empty()) cfg.output.path = output;

    Report rep;
    if (subs["solve"]->parsed()) rep = cmd_solve(cfg, trajectory);
    else if (subs["check"]->parsed()) rep = cmd_check(cfg);
    else if (subs["sens"]->parsed()) rep = cmd_sens(cfg);
    else if (subs["sens2"]->parsed()) rep = cmd_sens2(cfg);
    else if (subs["fd-verify"]->parsed()) rep = cmd_fd_verify(cfg);
    else if (subs["fit"]->parsed()) rep = cmd_fit(cfg);
    else rep = cmd_validate(cfg);

    std::ofstream file;
    if (!cfg.output.path.empty()) {
      file.open(cfg.output.path);
      if (!file) throw ConfigError("cannot write output file", cfg.output.path, 0);
    }
    std::ostream& os = cfg.output.path.empty() ? out : file;
    if (cfg.output.format == "json") emit_json(rep, os);
    else emit_csv(rep, os);
    if (rep.code == Exit::hypothesis) err << "sdde " << rep.command << ": hypothesis not satisfied\n";
    return rep.code;
  } catch (const HypothesisError& e) {
    err << "sdde: hypothesis not satisfied: " << e.what() << "\n";
    return Exit::hypothesis;
  } catch (const ConfigError& e) {
    err << "sdde: config error: " << e.what() << "\n";
    return Exit::failure;
  } catch (const std::exception& e) {
    err << "sdde: " << e.what() << "\n";
    return Exit::failure;
  }
}

}  // namespace sdde::cli
