#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sdde/errors.hpp"
#include "sdde/estimate.hpp"
#include "sdde/model.hpp"
#include "sdde/oracle.hpp"
#include "sdde/solver.hpp"

namespace sdde::cli {

/// Bad config: field is the dotted path of the offending key, line is 1-based (0 when unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field, int line);
  [[nodiscard]] const std::string& field() const noexcept { return field_; }
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

struct NamedDirection {
  std::string name;
  Direction direction;
};

struct OutputSpec {
  std::string format = "csv";  ///< csv | json
  std::string path;            ///< empty means stdout
  std::vector<double> times;   ///< explicit sample times; empty means a uniform grid
  double start = 0.0;
  double stop = -1.0;          ///< negative means alpha
  int count = 21;
};

struct RunConfig {
  std::shared_ptr<const ModelSpec> model;
  Parameter gamma;
  SolveConfig solve;
  std::vector<NamedDirection> directions;  ///< empty means the canonical theta / xi directions
  FdSchedule fd;
  bool fd_second = false;
  std::string observations;                ///< resolved against the config's directory
  FitMask fit_mask;
  bool fit_mask_set = false;
  FitOptions fit;
  std::size_t pm_cells = 2000;
  double slope_floor = 1e-8;
  int validate_probes = 20;
  double validate_tol = 1e-6;
  double validate_radius = 1.0;
  OutputSpec output;
};

/// Parses a YAML config. Unknown keys, missing keys and bad values raise ConfigError.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Names accepted under model.f.core.type and model.tau.core.type, sorted.
[[nodiscard]] std::vector<std::string> f_core_names();
[[nodiscard]] std::vector<std::string> tau_core_names();

/// Rows "time, x_1..x_n[, weight]"; a non-numeric first line is taken as a header.
[[nodiscard]] ObservationSet read_observations(std::istream& is, std::size_t n);
[[nodiscard]] ObservationSet read_observations(const std::filesystem::path& path, std::size_t n);

/// Sample times of the output grid, clipped to [-r, alpha].
[[nodiscard]] std::vector<double> output_times(const RunConfig& cfg, double alpha);

/// Directions of the run with their names (canonical ones are theta1.., xi1..).
[[nodiscard]] std::vector<NamedDirection> run_directions(const RunConfig& cfg);

/// Exit codes of run().
enum Exit : int { ok = 0, failure = 1, hypothesis = 2 };

/// Entry point of the sdde tool. Tables go to out (or the configured file), diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sdde::cli
