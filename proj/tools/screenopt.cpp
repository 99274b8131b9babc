#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "screenopt/app.hpp"
#include "screenopt/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical screening with risk-averse agents"};
  app.require_subcommand(1);

  std::string run_config, check_config, dir_a, dir_b, out_dir;
  std::optional<std::uint64_t> seed;

  CLI::App* run = app.add_subcommand("run", "Solve a configuration and write its artifacts");
  run->add_option("config", run_config, "Configuration JSON")->required();
  run->add_option("--out", out_dir, "Output directory (overrides out_dir)");
  run->add_option("--seed", seed, "Seed recorded with the run");

  CLI::App* compare = app.add_subcommand("compare", "Compare two run directories");
  compare->add_option("dir_a", dir_a)->required();
  compare->add_option("dir_b", dir_b)->required();

  CLI::App* check = app.add_subcommand("check", "Validate a configuration without solving");
  check->add_option("config", check_config, "Configuration JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      screenopt::RunConfig cfg = screenopt::load_config(run_config);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (seed) cfg.solver.seed = *seed;
      const screenopt::RunOutcome outcome = screenopt::run(cfg, std::cerr);
      if (outcome.exit_code == 2) std::cerr << "error: solver did not converge\n";
      return outcome.exit_code;
    }
    if (*compare) {
      std::cout << screenopt::comparison_json(screenopt::compare(dir_a, dir_b));
      return 0;
    }
    screenopt::load_config(check_config);
    std::cout << "ok\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
