#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fpratelab/drift.hpp"
#include "fpratelab/evolve.hpp"
#include "fpratelab/grid.hpp"
#include "fpratelab/operators.hpp"

namespace fpl {

struct DomainConfig {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct EvolveConfig {
  double dt = 1e-3;
  double final_time = 1.0;
  double theta = 1.0;
  int snapshot_stride = 100;
  std::uint64_t seed = 0;
};

struct OutputConfig {
  std::string directory = ".";
  std::vector<std::string> formats{"csv", "json"};

  bool wants(std::string_view format) const;
};

/// A validated experiment description. Defaults apply to the solver,
/// evolve and outputs blocks and to `diffusion`; domain, cells and drift are
/// required.
struct ExperimentConfig {
  DomainConfig domain;
  std::vector<int> cells;
  double diffusion = 1.0;
  DriftSpec drift = ZeroDrift{};
  SolverOptions solver;
  EvolveConfig evolve;
  OutputConfig outputs;

  Grid grid() const;
  StepOptions step_options() const;
};

/// Parse or schema failure. `violations` lists every problem found, each
/// prefixed with its field path (or with line/column for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The effective configuration (defaults filled in), in the input schema.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical serialization of config_to_json, as hex.
std::string config_hash(const ExperimentConfig& config);

}  // namespace fpl
