#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "morseflow/scenario.hpp"

namespace {

// Accept either a path to a JSON config or the name of a bundled scenario.
std::string load_config(const std::string& arg) {
  std::ifstream in(arg, std::ios::binary);
  if (in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  return morseflow::bundled_scenario_text(arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"morseflow: pullback attractors, Morse decompositions and "
               "Lyapunov certificates for random dynamical systems"};
  app.require_subcommand(1);

  std::string run_arg, validate_arg;
  CLI::App* run_cmd = app.add_subcommand(
      "run", "execute a scenario (config file path or bundled name)");
  run_cmd->add_option("config", run_arg, "config file or bundled scenario")
      ->required();
  CLI::App* validate_cmd = app.add_subcommand(
      "validate", "check a scenario config and list every problem");
  validate_cmd
      ->add_option("config", validate_arg, "config file or bundled scenario")
      ->required();
  CLI::App* list_cmd =
      app.add_subcommand("list-scenarios", "print the bundled scenario names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& name : morseflow::bundled_scenario_names())
        std::cout << name << "\n";
      return 0;
    }

    if (validate_cmd->parsed()) {
      morseflow::ScenarioConfig config;
      try {
        config = morseflow::parse_scenario(load_config(validate_arg));
      } catch (const morseflow::ConfigError& e) {
        std::cout << e.what() << "\n";
        return 1;
      }
      const auto problems = morseflow::validate_scenario(config);
      if (problems.empty()) {
        std::cout << "ok: " << config.name << "\n";
        return 0;
      }
      for (const auto& p : problems) std::cout << "problem: " << p << "\n";
      return 1;
    }

    const morseflow::ScenarioConfig config =
        morseflow::parse_scenario(load_config(run_arg));
    const morseflow::RunReport report = morseflow::run_scenario(config);
    for (const auto& a : report.analyses) {
      std::printf("[%s] %s (%s, %.2fs)\n", a.status.c_str(), a.id.c_str(),
                  a.op.c_str(), a.elapsed_seconds);
      for (const auto& w : a.warnings)
        std::printf("    warning: %s\n", w.c_str());
    }
    std::cout << "outputs under " << report.output_dir << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
