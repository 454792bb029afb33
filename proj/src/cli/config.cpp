#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "sdde/cli.hpp"
#include "sdde/cores.hpp"
#include "sdde/sens1.hpp"

namespace sdde::cli {

ConfigError::ConfigError(const std::string& what, std::string field, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + field + ": " + what : field + ": " + what),
      field_(std::move(field)),
      line_(line) {}

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

/// A node together with its dotted path and the line of the enclosing map (for missing keys).
struct At {
  YAML::Node node;
  std::string path;
  int parent_line = 0;

  [[nodiscard]] bool present() const { return node.IsDefined() && !node.IsNull(); }
  [[nodiscard]] int line() const { return present() ? line_of(node) : parent_line; }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what, path, line()); }

  [[nodiscard]] At operator[](const std::string& key) const {
    const YAML::Node& n = node;
    return {n[key], path.empty() ? key : path + "." + key, line_of(node)};
  }
  [[nodiscard]] At at(std::size_t i) const {
    const YAML::Node& n = node;
    return {n[i], path + "[" + std::to_string(i) + "]", line_of(node)};
  }
};

void need_map(const At& a) {
  if (!a.present()) a.fail("missing section");
  if (!a.node.IsMap()) a.fail("expected a map");
}

void check_keys(const At& a, const std::set<std::string>& allowed) {
  need_map(a);
  for (auto it = a.node.begin(); it != a.node.end(); ++it) {
    const auto key = it->first.as<std::string>();
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "'", a.path.empty() ? key : a.path + "." + key, line_of(it->first));
    }
  }
}

template <class T>
T scalar(const At& a) {
  if (!a.present()) a.fail("missing value");
  if (!a.node.IsScalar()) a.fail("expected a scalar");
  try {
    return a.node.as<T>();
  } catch (const YAML::Exception&) {
    a.fail("cannot read '" + a.node.Scalar() + "'");
  }
}

template <class T>
T scalar_or(const At& a, T fallback) {
  return a.present() ? scalar<T>(a) : fallback;
}

double positive(const At& a) {
  const double v = scalar<double>(a);
  if (!(v > 0.0) || !std::isfinite(v)) a.fail("must be positive");
  return v;
}

std::size_t count_of(const At& a) {
  const int v = scalar<int>(a);
  if (v < 0) a.fail("must not be negative");
  return static_cast<std::size_t>(v);
}

/// A list of numbers; a bare number is accepted when exactly one entry is expected.
Vector vector_of(const At& a, long expected = -1) {
  if (!a.present()) a.fail("missing value");
  Vector v;
  if (a.node.IsScalar()) {
    v = Vector::Constant(1, scalar<double>(a));
  } else if (a.node.IsSequence()) {
    v.resize(static_cast<Eigen::Index>(a.node.size()));
    for (std::size_t i = 0; i < a.node.size(); ++i) v[static_cast<Eigen::Index>(i)] = scalar<double>(a.at(i));
  } else {
    a.fail("expected a list of numbers");
  }
  if (expected >= 0 && v.size() != expected) {
    a.fail("expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

std::vector<std::size_t> indices_of(const At& a, std::size_t bound) {
  std::vector<std::size_t> out;
  if (!a.present()) return out;
  if (!a.node.IsSequence()) a.fail("expected a list of indices");
  for (std::size_t i = 0; i < a.node.size(); ++i) {
    const At e = a.at(i);
    const int k = scalar<int>(e);
    if (k < 0 || static_cast<std::size_t>(k) >= bound) e.fail("index out of range [0, " + std::to_string(bound) + ")");
    out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

/// Rows of numbers; a flat list is one row.
Matrix matrix_of(const At& a, long rows, long cols) {
  if (!a.present()) a.fail("missing value");
  if (!a.node.IsSequence() || a.node.size() == 0) a.fail("expected a list of rows");
  std::vector<Vector> r;
  if (a.node[0].IsScalar()) {
    r.push_back(vector_of(a));
  } else {
    for (std::size_t i = 0; i < a.node.size(); ++i) r.push_back(vector_of(a.at(i)));
  }
  const auto c = r.front().size();
  for (const auto& row : r) {
    if (row.size() != c) a.fail("rows have different lengths");
  }
  if ((rows >= 0 && static_cast<long>(r.size()) != rows) || (cols >= 0 && c != cols)) {
    a.fail("expected a " + std::to_string(rows) + " x " + std::to_string(cols) + " matrix, got " +
           std::to_string(r.size()) + " x " + std::to_string(c));
  }
  Matrix m(static_cast<Eigen::Index>(r.size()), c);
  for (std::size_t i = 0; i < r.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = r[i].transpose();
  return m;
}

// Atoms.

PointLag parse_lag(const At& a, double r) {
  PointLag lag;
  if (a.present() && a.node.IsScalar()) {
    const double v = scalar<double>(a);
    if (v < 0.0 || v > r) a.fail("lag must lie in [0, r]");
    return cores::constant_lag(v);
  }
  check_keys(a, {"type", "value", "mean", "amplitude", "frequency"});
  const auto type = scalar<std::string>(a["type"]);
  if (type == "constant") return parse_lag(a["value"], r);
  if (type == "sine") {
    const double mean = scalar<double>(a["mean"]);
    const double amp = scalar<double>(a["amplitude"]);
    if (mean - std::abs(amp) < 0.0 || mean + std::abs(amp) > r) a.fail("sine lag leaves [0, r]");
    return cores::sine_lag(mean, amp, scalar<double>(a["frequency"]));
  }
  a["type"].fail("unknown lag type '" + type + "' (constant, sine)");
}

Kernel parse_kernel(const At& a, std::size_t n) {
  check_keys(a, {"type", "matrix", "rate", "nodes"});
  const auto type = scalar<std::string>(a["type"]);
  const Matrix M = matrix_of(a["matrix"], -1, static_cast<long>(n));
  const int nodes = scalar_or<int>(a["nodes"], 4);
  if (nodes < 1 || nodes > 20) a["nodes"].fail("nodes must be in [1, 20]");
  if (type == "constant") {
    if (a["rate"].present()) a["rate"].fail("a constant kernel has no rate");
    return cores::constant_kernel(M, nodes);
  }
  if (type == "exponential") return cores::exponential_kernel(M, scalar<double>(a["rate"]), nodes);
  a["type"].fail("unknown kernel type '" + type + "' (constant, exponential)");
}

DelayAtomSet parse_atoms(const At& a, std::size_t n, double r) {
  DelayAtomSet atoms;
  const At lags = a["lags"];
  if (lags.present()) {
    if (!lags.node.IsSequence()) lags.fail("expected a list of lags");
    for (std::size_t i = 0; i < lags.node.size(); ++i) atoms.point_lags.push_back(parse_lag(lags.at(i), r));
  }
  if (a["kernel"].present()) atoms.kernel = parse_kernel(a["kernel"], n);
  return atoms;
}

// Core registry.

struct CoreShape {
  std::size_t n = 0;      ///< outputs of f; 1 for tau
  std::size_t psi = 0;
  std::size_t state = 0;  ///< n for f, 0 for tau
  std::size_t param = 0;  ///< p for f, q for tau
  [[nodiscard]] std::size_t arity() const { return psi + state + param; }
};

struct CoreEntry {
  std::set<std::string> keys;
  std::function<SmoothCore(const At&, const CoreShape&)> build;
};

SmoothCore quadratic_core(const At& a, const CoreShape& s) {
  const auto outs = static_cast<long>(s.n);
  const auto ar = static_cast<long>(s.arity());
  const Vector c = vector_of(a["c"], outs);
  const Matrix L = a["L"].present() ? matrix_of(a["L"], outs, ar) : Matrix::Zero(outs, ar);
  std::vector<Matrix> Q;
  const At q = a["Q"];
  if (q.present()) {
    if (!q.node.IsSequence() || static_cast<long>(q.node.size()) != outs) {
      q.fail("expected one arity x arity matrix per output");
    }
    for (std::size_t o = 0; o < q.node.size(); ++o) Q.push_back(matrix_of(q.at(o), ar, ar));
  }
  return cores::quadratic(c, L, Q);
}

const std::map<std::string, CoreEntry>& f_registry() {
  static const std::map<std::string, CoreEntry> reg{
      {"linear", {{"type"}, [](const At&, const CoreShape& s) { return cores::linear(s.n, s.psi); }}},
      {"logistic", {{"type"}, [](const At&, const CoreShape& s) { return cores::logistic(s.psi); }}},
      {"quadratic", {{"type", "c", "L", "Q"}, quadratic_core}},
  };
  return reg;
}

const std::map<std::string, CoreEntry>& tau_registry() {
  static const std::map<std::string, CoreEntry> reg{
      {"constant",
       {{"type", "value"},
        [](const At& a, const CoreShape& s) { return cores::constant_delay(positive(a["value"]), s.psi, s.param); }}},
      {"tanh", {{"type"}, [](const At&, const CoreShape& s) { return cores::tanh_delay(s.psi, s.param); }}},
      {"rational", {{"type"}, [](const At&, const CoreShape& s) { return cores::rational_delay(s.psi, s.param); }}},
      {"parameter", {{"type"}, [](const At&, const CoreShape& s) { return cores::parameter_delay(s.psi, s.param); }}},
      {"sinusoid",
       {{"type", "mean", "amplitude", "frequency"},
        [](const At& a, const CoreShape& s) {
          return cores::sinusoid_delay(scalar<double>(a["mean"]), scalar<double>(a["amplitude"]),
                                       scalar<double>(a["frequency"]), s.psi, s.param);
        }}},
      {"quadratic", {{"type", "c", "L", "Q"}, quadratic_core}},
  };
  return reg;
}

SmoothCore parse_core(const At& a, const std::map<std::string, CoreEntry>& reg, const CoreShape& shape) {
  need_map(a);
  const auto type = scalar<std::string>(a["type"]);
  const auto it = reg.find(type);
  if (it == reg.end()) {
    std::string names;
    for (const auto& [k, v] : reg) names += (names.empty() ? "" : ", ") + k;
    a["type"].fail("unknown core '" + type + "' (" + names + ")");
  }
  check_keys(a, it->second.keys);
  try {
    return it->second.build(a, shape);
  } catch (const DomainError& e) {
    a.fail(e.what());
  }
}

// Initial functions and directions.

Trajectory parse_phi(const At& a, std::size_t n, double r) {
  check_keys(a, {"constant", "knots", "values", "slopes"});
  const auto N = static_cast<long>(n);
  if (a["constant"].present()) {
    for (const char* k : {"knots", "values", "slopes"}) {
      if (a[k].present()) a[k].fail("not allowed together with 'constant'");
    }
    return Trajectory::constant(-r, 0.0, vector_of(a["constant"], N));
  }
  const Vector knots = vector_of(a["knots"]);
  const auto count = static_cast<std::size_t>(knots.size());
  if (count < 2) a["knots"].fail("need at least two knots");
  if (std::abs(knots[0] + r) > 1e-12 || knots[knots.size() - 1] != 0.0) a["knots"].fail("knots must run from -r to 0");
  for (Eigen::Index i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) a["knots"].fail("knots must increase");
  }
  auto rows = [&](const At& v) {
    std::vector<Vector> out;
    if (!v.node.IsSequence() || v.node.size() != count) v.fail("expected one entry per knot");
    for (std::size_t i = 0; i < count; ++i) out.push_back(vector_of(v.at(i), N));
    return out;
  };
  std::vector<double> k(knots.data(), knots.data() + knots.size());
  k.front() = -r;
  const auto values = rows(a["values"]);
  const auto slopes = a["slopes"].present() ? rows(a["slopes"]) : std::vector<Vector>(count, Vector::Zero(N));
  return Trajectory::hermite(k, values, slopes);
}

NamedDirection parse_direction(const At& a, const ModelSpec& m, const Parameter& gamma, std::size_t index) {
  check_keys(a, {"name", "theta", "xi", "phi"});
  NamedDirection d;
  d.name = scalar_or<std::string>(a["name"], "d" + std::to_string(index + 1));
  d.direction = zero_direction(gamma);
  if (a["theta"].present()) d.direction.theta = vector_of(a["theta"], static_cast<long>(m.p()));
  if (a["xi"].present()) d.direction.xi = vector_of(a["xi"], static_cast<long>(m.q()));
  if (a["phi"].present()) d.direction.phi = parse_phi(a["phi"], m.n(), m.r());
  return d;
}

void parse_model(const At& root, RunConfig& cfg) {
  const At mod = root["model"];
  check_keys(mod, {"n", "r", "horizon", "f", "tau"});
  const std::size_t n = mod["n"].present() ? count_of(mod["n"]) : 1;
  if (n < 1) mod["n"].fail("must be at least 1");
  const double r = positive(mod["r"]);
  const double horizon = positive(mod["horizon"]);

  const At par = root["parameter"];
  check_keys(par, {"theta", "xi", "phi"});
  cfg.gamma.theta = par["theta"].present() ? vector_of(par["theta"]) : Vector(0);
  cfg.gamma.xi = par["xi"].present() ? vector_of(par["xi"]) : Vector(0);
  const std::size_t p = static_cast<std::size_t>(cfg.gamma.theta.size());
  const std::size_t q = static_cast<std::size_t>(cfg.gamma.xi.size());

  const At f = mod["f"];
  check_keys(f, {"lags", "kernel", "core"});
  DelayAtomSet fa = parse_atoms(f, n, r);
  const CoreShape fs{n, fa.psi_size(n), n, p};
  SmoothCore fc = parse_core(f["core"], f_registry(), fs);

  const At t = mod["tau"];
  check_keys(t, {"lags", "kernel", "core"});
  DelayAtomSet ta = parse_atoms(t, n, r);
  const CoreShape ts{1, ta.psi_size(n), 0, q};
  SmoothCore tc = parse_core(t["core"], tau_registry(), ts);

  try {
    cfg.model = std::make_shared<const ModelSpec>(n, p, q, r, horizon, std::move(fa), std::move(fc), std::move(ta),
                                                  std::move(tc));
  } catch (const DomainError& e) {
    mod.fail(e.what());
  }
  cfg.gamma.phi = parse_phi(par["phi"], n, r);
}

void parse_solve(const At& a, SolveConfig& s) {
  if (!a.present()) return;
  check_keys(a, {"step", "tol", "tau_min", "alpha", "discontinuity_depth", "max_iterations", "compat_tol"});
  if (a["step"].present()) s.step = positive(a["step"]);
  if (a["tol"].present()) s.tol = positive(a["tol"]);
  if (a["tau_min"].present()) s.tau_min = positive(a["tau_min"]);
  if (a["alpha"].present()) s.max_alpha = positive(a["alpha"]);
  if (a["discontinuity_depth"].present()) s.discontinuity_depth = static_cast<int>(count_of(a["discontinuity_depth"]));
  if (a["max_iterations"].present()) s.max_iterations = static_cast<int>(count_of(a["max_iterations"]));
  if (a["compat_tol"].present()) s.compat_tol = positive(a["compat_tol"]);
}

void parse_output(const At& a, OutputSpec& o) {
  if (!a.present()) return;
  check_keys(a, {"format", "path", "times"});
  o.format = scalar_or<std::string>(a["format"], o.format);
  if (o.format != "csv" && o.format != "json") a["format"].fail("format must be csv or json");
  o.path = scalar_or<std::string>(a["path"], "");
  const At t = a["times"];
  if (!t.present()) return;
  if (t.node.IsSequence()) {
    const Vector v = vector_of(t);
    o.times.assign(v.data(), v.data() + v.size());
    if (!std::is_sorted(o.times.begin(), o.times.end())) t.fail("times must be sorted");
    return;
  }
  check_keys(t, {"start", "stop", "count"});
  o.start = scalar_or<double>(t["start"], o.start);
  o.stop = scalar_or<double>(t["stop"], o.stop);
  if (t["count"].present()) o.count = static_cast<int>(count_of(t["count"]));
  if (o.count < 2) t["count"].fail("need at least two samples");
}

RunConfig parse_root(const YAML::Node& doc, const std::filesystem::path& base) {
  const At root{doc, "", 1};
  check_keys(root, {"model", "parameter", "solve", "output", "directions", "fd", "fit", "check", "validate"});
  RunConfig cfg;
  parse_model(root, cfg);
  const ModelSpec& m = *cfg.model;
  parse_solve(root["solve"], cfg.solve);
  parse_output(root["output"], cfg.output);

  const At dirs = root["directions"];
  if (dirs.present()) {
    if (!dirs.node.IsSequence()) dirs.fail("expected a list of directions");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < dirs.node.size(); ++i) {
      auto d = parse_direction(dirs.at(i), m, cfg.gamma, i);
      if (!seen.insert(d.name).second) dirs.at(i).fail("duplicate direction name '" + d.name + "'");
      cfg.directions.push_back(std::move(d));
    }
  }

  const At fd = root["fd"];
  if (fd.present()) {
    check_keys(fd, {"eps", "richardson", "second"});
    if (fd["eps"].present()) {
      const Vector e = vector_of(fd["eps"]);
      cfg.fd.eps_list.assign(e.data(), e.data() + e.size());
      for (std::size_t i = 0; i < cfg.fd.eps_list.size(); ++i) {
        if (!(cfg.fd.eps_list[i] > 0.0) || (i > 0 && !(cfg.fd.eps_list[i] < cfg.fd.eps_list[i - 1]))) {
          fd["eps"].fail("eps must be positive and strictly decreasing");
        }
      }
    }
    cfg.fd.richardson = scalar_or<bool>(fd["richardson"], cfg.fd.richardson);
    cfg.fd_second = scalar_or<bool>(fd["second"], false);
  }

  const At fit = root["fit"];
  if (fit.present()) {
    check_keys(fit, {"observations", "free", "max_iterations", "step_tol", "rank_tol"});
    if (fit["observations"].present()) {
      std::filesystem::path p = scalar<std::string>(fit["observations"]);
      cfg.observations = (p.is_relative() && !base.empty() ? base / p : p).string();
    }
    const At free = fit["free"];
    if (free.present()) {
      check_keys(free, {"theta", "xi", "phi"});
      cfg.fit_mask.theta = indices_of(free["theta"], m.p());
      cfg.fit_mask.xi = indices_of(free["xi"], m.q());
      cfg.fit_mask.phi = indices_of(free["phi"], 2 * m.n() * (cfg.gamma.phi.knots().size()));
      cfg.fit_mask_set = true;
    }
    if (fit["max_iterations"].present()) cfg.fit.max_iterations = static_cast<int>(count_of(fit["max_iterations"]));
    if (fit["step_tol"].present()) cfg.fit.step_tol = positive(fit["step_tol"]);
    if (fit["rank_tol"].present()) cfg.fit.rank_tol = positive(fit["rank_tol"]);
  }
  cfg.fit.solve = cfg.solve;

  const At chk = root["check"];
  if (chk.present()) {
    check_keys(chk, {"pm_cells", "slope_floor"});
    if (chk["pm_cells"].present()) cfg.pm_cells = count_of(chk["pm_cells"]);
    if (chk["slope_floor"].present()) cfg.slope_floor = positive(chk["slope_floor"]);
  }

  const At val = root["validate"];
  if (val.present()) {
    check_keys(val, {"probes", "tol", "radius"});
    if (val["probes"].present()) cfg.validate_probes = static_cast<int>(count_of(val["probes"]));
    if (val["tol"].present()) cfg.validate_tol = positive(val["tol"]);
    if (val["radius"].present()) cfg.validate_radius = positive(val["radius"]);
  }
  return cfg;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, "<yaml>", e.mark.is_null() ? 0 : e.mark.line + 1);
  }
  if (!doc.IsMap()) throw ConfigError("expected a map at the top level", "<root>", 1);
  return parse_root(doc, base_dir);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file", path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::vector<std::string> f_core_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : f_registry()) out.push_back(k);
  return out;
}

std::vector<std::string> tau_core_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : tau_registry()) out.push_back(k);
  return out;
}

ObservationSet read_observations(std::istream& is, std::size_t n) {
  ObservationSet obs;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        cells.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("not a number in '" + line + "'", "observations", lineno);
    }
    first = false;
    if (cells.size() != n + 1 && cells.size() != n + 2) {
      throw ConfigError("expected time, " + std::to_string(n) + " components and an optional weight",
                        "observations", lineno);
    }
    Observation o;
    o.t = cells[0];
    o.value = Eigen::Map<const Vector>(cells.data() + 1, static_cast<Eigen::Index>(n));
    o.weight = cells.size() == n + 2 ? cells.back() : 1.0;
    if (!(o.weight >= 0.0)) throw ConfigError("weight must not be negative", "observations", lineno);
    obs.samples.push_back(std::move(o));
  }
  return obs;
}

ObservationSet read_observations(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file", path.string(), 0);
  return read_observations(in, n);
}

std::vector<double> output_times(const RunConfig& cfg, double alpha) {
  const double lo = -cfg.model->r();
  std::vector<double> out;
  if (!cfg.output.times.empty()) {
    for (double t : cfg.output.times) {
      if (t >= lo && t <= alpha) out.push_back(t);
    }
    return out;
  }
  const double a = std::max(lo, cfg.output.start);
  const double b = cfg.output.stop < 0.0 ? alpha : std::min(alpha, cfg.output.stop);
  const int k = cfg.output.count - 1;
  for (int i = 0; i <= k; ++i) out.push_back(i == k ? b : a + (b - a) * i / k);
  return out;
}

std::vector<NamedDirection> run_directions(const RunConfig& cfg) {
  if (!cfg.directions.empty()) return cfg.directions;
  std::vector<NamedDirection> out;
  const auto dirs = canonical_directions(*cfg.model, cfg.gamma);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const bool th = i < cfg.model->p();
    const std::size_t k = th ? i : i - cfg.model->p();
    out.push_back({(th ? "theta" : "xi") + std::to_string(k + 1), dirs[i]});
  }
  return out;
}

}  // namespace sdde::cli
