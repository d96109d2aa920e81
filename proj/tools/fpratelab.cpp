#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fpratelab/commands.hpp"
#include "fpratelab/config.hpp"
#include "fpratelab/report_io.hpp"

int main(int argc, char** argv) {
  namespace cli = fpl::cli;
  CLI::App app{"Fokker-Planck decay-rate laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool paper_mode = false;

  const std::pair<cli::Command, const char*> commands[] = {
      {cli::Command::validate, "Check the inward-drift condition and generator invariants"},
      {cli::Command::steady, "Compute the steady state"},
      {cli::Command::dual, "Compute the dual state by both constructions"},
      {cli::Command::gap, "Weighted spectral gaps for H = 1, u_inf, K"},
      {cli::Command::evolve, "Integrate the Fokker-Planck equation and write the trajectory"},
      {cli::Command::report, "Fit the decay rate and check it against the spectral gap"},
  };
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(cli::command_name(command), help);
    sub->add_option("--config", config_path, "Experiment configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--paper-mode", paper_mode, "Treat a drift violating F.n < 0 as an error");
    sub->add_option("--out", out_dir, "Output directory (overrides outputs.directory)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitRejected;
  }

  const auto command = cli::parse_command(app.get_subcommands().front()->get_name());
  fpl::ExperimentConfig config;
  try {
    config = fpl::load_config(config_path);
  } catch (const fpl::ConfigError& e) {
    fpl::write_json(std::cerr, {{"error", "config"}, {"violations", e.violations()}});
    return cli::kExitRejected;
  }

  cli::RunOptions options;
  options.paper_mode = paper_mode;
  if (!out_dir.empty()) options.out_dir = out_dir;
  return cli::run(*command, config, options, std::cout, std::cerr);
}
