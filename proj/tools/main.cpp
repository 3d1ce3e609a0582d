#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cbi/scenario.hpp"
#include "cli.hpp"

#ifndef CBI_DEFAULT_SCENARIO_DIR
#define CBI_DEFAULT_SCENARIO_DIR "scenarios"
#endif

int main(int argc, char** argv) {
  using cbi::cli::RunSpec;
  RunSpec spec;
  std::string params;
  std::string out;

  CLI::App app{"Multi-type CBI processes: Laplace transforms, moments and simulation"};
  app.require_subcommand(1);
  app.add_option("--threads", spec.threads, "Worker threads (0: $CBI_NUM_THREADS or all cores)");

  auto params_option = [&](CLI::App* sub) {
    sub->add_option("--params,-p", params, "Parameter JSON, or a scenario JSON with a params member")
        ->required();
  };

  CLI::App* validate = app.add_subcommand("validate", "Check admissibility and print the report");
  params_option(validate);

  CLI::App* derive = app.add_subcommand("derive", "Print the derived drift quantities");
  params_option(derive);

  CLI::App* laplace = app.add_subcommand("laplace", "Laplace transform via the Riccati system");
  params_option(laplace);
  laplace->add_option("--x", spec.x, "Initial state")->delimiter(',')->required();
  laplace->add_option("--lam", spec.lam, "Transform argument")->delimiter(',')->required();
  laplace->add_option("--t", spec.t, "Time")->required();

  CLI::App* mean = app.add_subcommand("mean", "Closed-form first moment");
  params_option(mean);
  mean->add_option("--m0", spec.m0, "Initial mean")->delimiter(',')->required();
  mean->add_option("--t", spec.t, "Time")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "Write simulated paths as CSV");
  params_option(simulate);
  simulate->add_option("--x0", spec.x0, "Initial state")->delimiter(',')->required();
  simulate->add_option("--T", spec.T, "Horizon")->capture_default_str();
  simulate->add_option("--dt", spec.dt, "Step size")->capture_default_str();
  simulate->add_option("--n", spec.n, "Number of paths")->capture_default_str();
  simulate->add_option("--seed", spec.seed, "64-bit seed")->capture_default_str();
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--mode", spec.mode, "Positivity mode")
      ->check(CLI::IsMember({"faithful", "clamp"}))
      ->capture_default_str();
  simulate->add_option("--eps", spec.eps, "Small-jump truncation")->capture_default_str();
  simulate->add_flag("--jumps", spec.jumps, "Also write jump logs");

  CLI::App* verify = app.add_subcommand("verify", "Monte Carlo verification on a scenario");
  verify->add_option("check", spec.check, "mean | laplace | comparison")
      ->check(CLI::IsMember({"mean", "laplace", "comparison"}))
      ->required();
  verify->add_option("--scenario", spec.scenario, "Scenario name or file")->required();
  verify->add_option("--out", out, "JSON report file");
  verify->add_option("--paths", spec.paths, "Override the scenario path count");
  verify->add_flag("--with-timing", spec.with_timing, "Include runtime in the JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cbi::cli::kInputError;
  }

  spec.command = app.get_subcommands().front()->get_name();
  spec.params = params;
  spec.out = out;
  spec.scenario_dir = cbi::scenario_dir(CBI_DEFAULT_SCENARIO_DIR);
  return cbi::cli::run(spec, std::cout, std::cerr);
}
