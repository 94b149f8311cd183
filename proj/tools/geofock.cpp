// geofock command line: solver runs, sequence scenarios and the identity battery.
//
// Exit status: 0 success, 1 computation failure or non-convergence,
// 2 configuration or usage error. Errors go to stderr as one JSON line.

#include <iostream>

#include "CLI11.hpp"
#include "geofock/cli.hpp"

using namespace geofock;

namespace {

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<long> seed;
  std::optional<int> restarts;
};

int execute(RunConfig cfg, const RunArgs& args, const std::string& command) {
  if (args.seed) cfg.set("solver.seed", std::to_string(*args.seed));
  if (args.restarts) cfg.set("solver.restarts", std::to_string(*args.restarts));
  const std::string out = args.out.empty() ? cfg.text("output.dir") : args.out;
  auto outcome = run_scenario(cfg, out, command);
  nlohmann::json ok = {{"status", outcome.converged ? "ok" : "not_converged"},
                       {"out", out},
                       {"files", outcome.files}};
  std::cout << ok.dump() << '\n';
  if (!outcome.converged) {
    std::cerr << error_record("computation", "", "a solver point did not converge; see manifest.json")
              << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated Fock space many-body solvers"};
  app.require_subcommand(1);

  RunArgs solve_args;
  std::string solve_kind;
  auto* solve = app.add_subcommand("solve", "Run one solver");
  solve->add_option("kind", solve_kind, "exact|hf|rank|pekar|hvz|scan")
      ->required()
      ->check(CLI::IsMember({"exact", "hf", "rank", "pekar", "hvz", "scan"}));
  solve->add_option("--config", solve_args.config, "Configuration file");
  solve->add_option("--out", solve_args.out, "Output directory (default: output.dir)");
  solve->add_option("--seed", solve_args.seed, "Overrides solver.seed");
  solve->add_option("--restarts", solve_args.restarts, "Overrides solver.restarts");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the scenario named in a configuration");
  run->add_option("--config", run_args.config, "Configuration file")->required();
  run->add_option("--out", run_args.out, "Output directory (default: output.dir)");
  run->add_option("--seed", run_args.seed, "Overrides solver.seed");
  run->add_option("--restarts", run_args.restarts, "Overrides solver.restarts");

  std::string level = "quick";
  std::uint64_t verify_seed = 20240601;
  auto* verify = app.add_subcommand("verify", "Identity battery over seeded random inputs");
  verify->add_option("level", level, "quick|full")->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--seed", verify_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_record("usage", "", e.what()) << '\n';
    return 2;
  }

  try {
    if (*solve) {
      RunConfig cfg = solve_args.config.empty() ? RunConfig() : RunConfig::load(solve_args.config);
      cfg.set("scenario", solve_kind);
      return execute(std::move(cfg), solve_args, "solve " + solve_kind);
    }
    if (*run) return execute(RunConfig::load(run_args.config), run_args, "run");
    auto report = verify_suite(level, verify_seed);
    print_verify_report(report, std::cout);
    return report.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << error_record("config", e.key(), e.what()) << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << error_record("precondition", "", e.what()) << '\n';
    return 2;
  } catch (const ComputationError& e) {
    std::cerr << error_record("computation", "", e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_record("internal", "", e.what()) << '\n';
    return 1;
  }
}
