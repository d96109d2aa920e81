#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>

#include "fpratelab/config.hpp"

namespace fpl::cli {

enum class Command { validate, steady, dual, gap, evolve, report };

std::optional<Command> parse_command(std::string_view name);
const char* command_name(Command command);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitRejected = 2;

/// Relative rate slack of the report acceptance: alpha_fit >= (1 - 0.05) lambda.
inline constexpr double kRateTolerance = 0.05;

struct RunOptions {
  /// Enforce the inward-drift condition as a hard error.
  bool paper_mode = false;
  /// Overrides config.outputs.directory.
  std::optional<std::filesystem::path> out_dir;
};

/// Runs one subcommand. The JSON report goes to `out` (and to
/// <dir>/<command>.json when json output is enabled); CSV artifacts go to the
/// output directory. Internal failures are reported as a JSON document on
/// `err` with exit code 1; rejected validation or acceptance gives 2.
int run(Command command, const ExperimentConfig& config, const RunOptions& options,
        std::ostream& out, std::ostream& err);

}  // namespace fpl::cli
