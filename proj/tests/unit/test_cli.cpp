#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdde/cli.hpp"

using namespace sdde;
using namespace sdde::cli;

namespace {

const std::filesystem::path configs = SDDE_CONFIG_DIR;

struct Result {
  int code = -1;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "sdde");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch(const std::string& name, const std::string& text) {
  const auto p = std::filesystem::temp_directory_path() / ("sdde_cli_test_" + name);
  std::ofstream(p) << text;
  return p;
}

/// Rows of the first CSV table, skipping comments and the header.
std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty()) break;
    if (line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) row.push_back(std::stod(c));
    rows.push_back(row);
  }
  return rows;
}

const char* minimal = R"(model:
  r: 1.0
  horizon: 2.0
  f:
    core: {type: linear}
  tau:
    core: {type: constant, value: 1.0}
parameter:
  theta: [-1.0]
  phi: {constant: [1.0]}
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
  const auto h = call({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("Usage") != std::string::npos);
  CHECK(h.out.find("fd-verify") != std::string::npos);
  CHECK(call({}).code == 1);
  CHECK(call({"solve"}).code == 1);
  CHECK(call({"frobnicate", "x.yaml"}).code == 1);
  CHECK(call({"solve", (configs / "linear.yaml").string(), "--format", "xml"}).code == 1);
  CHECK(call({"solve", "no/such/file.yaml"}).code == 1);
}

TEST_CASE("solve on the linear model") {
  const auto r = call({"solve", (configs / "linear.yaml").string()});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 21);
  bool seen = false;
  for (const auto& row : rows) {
    if (row[0] == 1.0) {
      seen = true;
      CHECK(std::abs(row[1]) < 1e-12);
    }
    if (row[0] <= 1.0) CHECK(std::abs(row[1] - (1.0 - row[0])) < 1e-12);
  }
  CHECK(seen);
}

TEST_CASE("check flags the constant history") {
  const auto bad = call({"check", (configs / "linear.yaml").string()});
  CHECK(bad.code == 2);
  CHECK(bad.out.find("# compatible: false") != std::string::npos);
  CHECK(bad.out.find("# is_pm: true") != std::string::npos);
  const auto good = call({"check", (configs / "linear_compatible.yaml").string()});
  CHECK(good.code == 0);
  CHECK(call({"sens2", (configs / "linear.yaml").string()}).code == 2);
}

TEST_CASE("identical config, identical bytes") {
  for (const char* fmt : {"csv", "json"}) {
    const auto cfg = (configs / "sd_tanh.yaml").string();
    const auto a = call({"sens", cfg, "--format", fmt});
    const auto b = call({"sens", cfg, "--format", fmt});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
  }
}

TEST_CASE("json output") {
  const auto r = call({"sens", (configs / "linear_compatible.yaml").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["command"] == "sens");
  const auto& t = doc["tables"]["sensitivity"];
  REQUIRE(t["columns"].size() == 3);
  CHECK(t["columns"][1] == "z:theta");
  // z_theta = t - t^2 / 2 on [0, 1], z for a constant phi direction = 1 - t
  for (const auto& row : t["rows"]) {
    const double s = row[0].get<double>();
    if (s > 1.0) continue;
    CHECK(std::abs(row[1].get<double>() - (s - s * s / 2)) < 1e-12);
    CHECK(std::abs(row[2].get<double>() - (1.0 - s)) < 1e-12);
  }
}

TEST_CASE("output file and trajectory dump") {
  const auto out = std::filesystem::temp_directory_path() / "sdde_cli_test_out.csv";
  const auto traj = std::filesystem::temp_directory_path() / "sdde_cli_test_traj.txt";
  const auto r = call({"solve", (configs / "linear.yaml").string(), "-o", out.string(), "--trajectory", traj.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(csv_rows(ss.str()).size() == 21);
  std::ifstream tf(traj);
  const auto x = Trajectory::read(tf);
  CHECK(std::abs(x.eval(2.0)[0] + 0.5) < 1e-12);
}

TEST_CASE("config errors carry field and line") {
  SUBCASE("unknown key") {
    const std::string text = std::string(minimal) + "solve:\n  step: 0.01\n  stepp: 0.02\n";
    try {
      (void)parse_config(text);
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.field() == "solve.stepp");
      CHECK(e.line() == 13);
    }
    const auto p = scratch("unknown.yaml", text);
    const auto r = call({"solve", p.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 13") != std::string::npos);
  }
  SUBCASE("unknown top-level section") {
    try {
      (void)parse_config(std::string(minimal) + "plot: true\n");
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.field() == "plot");
      CHECK(e.line() == 11);
    }
  }
  SUBCASE("bad number") {
    std::string text = minimal;
    text.replace(text.find("horizon: 2.0"), 12, "horizon: two");
    try {
      (void)parse_config(text);
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.field() == "model.horizon");
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("missing key") {
    std::string text = minimal;
    text.replace(text.find("  r: 1.0\n"), 9, "");
    try {
      (void)parse_config(text);
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.field() == "model.r");
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("unknown core names the registry") {
    std::string text = minimal;
    text.replace(text.find("type: linear"), 12, "type: cubic");
    try {
      (void)parse_config(text);
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.field() == "model.f.core.type");
      CHECK(std::string(e.what()).find("logistic") != std::string::npos);
    }
  }
  SUBCASE("wrong parameter size for the core") {
    std::string text = minimal;
    text.replace(text.find("theta: [-1.0]"), 13, "theta: [-1.0, 2.0]");
    CHECK_THROWS_AS((void)parse_config(text), cli::ConfigError);
  }
  SUBCASE("yaml syntax") {
    try {
      (void)parse_config("model: {r: 1\n");
      FAIL("expected a ConfigError");
    } catch (const cli::ConfigError& e) {
      CHECK(e.line() >= 1);
    }
  }
}

TEST_CASE("registry builds the structured template") {
  // tau = 1 + 0.2 x(t - eta(t)) through the quadratic template; the kernel argument has zero weight
  const std::string text = R"(model:
  r: 1.5
  horizon: 1.0
  f:
    core: {type: linear}
  tau:
    lags: [{type: sine, mean: 0.5, amplitude: 0.1, frequency: 1.0}]
    kernel: {type: exponential, matrix: [[0.1]], rate: 2.0, nodes: 3}
    core: {type: quadratic, c: [1.0], L: [[0.2, 0.0]]}
parameter:
  theta: [-1.0]
  phi: {constant: [1.0]}
)";
  const RunConfig cfg = parse_config(text);
  CHECK(cfg.model->n() == 1);
  CHECK(cfg.model->q() == 0);
  CHECK(cfg.model->tau_atoms().point_lags.size() == 1);
  REQUIRE(cfg.model->tau_atoms().kernel);
  CHECK(cfg.model->tau_atoms().kernel->nodes == 3);
  const auto rep = validate_model(*cfg.model, 10, 1e-6);
  CHECK(rep.passed);
  CHECK(cfg.gamma.phi.start() == -1.5);
}

TEST_CASE("directions and output grid") {
  const RunConfig cfg = load_config(configs / "linear_compatible.yaml");
  REQUIRE(cfg.directions.size() == 2);
  CHECK(cfg.directions[0].name == "theta");
  CHECK(cfg.directions[1].direction.phi.eval(-0.5)[0] == 1.0);
  const auto times = output_times(cfg, 2.0);
  REQUIRE(times.size() == 11);
  CHECK(times.front() == 0.0);
  CHECK(times.back() == 2.0);
  const RunConfig plain = parse_config(minimal);
  const auto names = run_directions(plain);
  REQUIRE(names.size() == 1);
  CHECK(names[0].name == "theta1");
}

TEST_CASE("observation files") {
  std::istringstream ok("time,x,weight\n0.5,1.0,2\n# comment\n1.0,0.5\n");
  const auto obs = read_observations(ok, 1);
  REQUIRE(obs.samples.size() == 2);
  CHECK(obs.samples[0].weight == 2.0);
  CHECK(obs.samples[1].weight == 1.0);
  CHECK(obs.samples[1].value[0] == 0.5);
  std::istringstream bad("0.5,1.0\n1.0,oops\n");
  try {
    (void)read_observations(bad, 1);
    FAIL("expected a ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream wide("0.5,1,2,3,4\n");
  CHECK_THROWS_AS((void)read_observations(wide, 1), cli::ConfigError);
}

TEST_CASE("fit recovers the generating parameters") {
  const auto r = call({"fit", (configs / "logistic_fit.yaml").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["meta"]["converged"] == true);
  const auto& rows = doc["tables"]["parameters"]["rows"];
  CHECK(std::abs(rows[0][1].get<double>() - 1.0) < 1e-6);
  CHECK(std::abs(rows[1][1].get<double>() - 2.0) < 1e-6);
  const auto& hist = doc["tables"]["history"]["rows"];
  for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i][1].get<double>() <= hist[i - 1][1].get<double>());
}

TEST_CASE("fd-verify and validate") {
  const auto r = call({"fd-verify", (configs / "sd_tanh.yaml").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["meta"]["max_first_deviation"].get<double>() < 1e-5);
  CHECK(doc["meta"]["max_second_deviation"].get<double>() < 1e-4);
  CHECK(call({"validate", (configs / "sd_tanh.yaml").string()}).code == 0);
}

}  // TEST_SUITE
