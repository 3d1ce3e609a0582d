#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cbi::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kInputError = 2,
  kInadmissible = 3,
  kNumericFailure = 4,
};

struct RunSpec {
  /// validate | derive | laplace | mean | simulate | verify
  std::string command;
  /// mean | laplace | comparison, for `verify`.
  std::string check;
  /// Parameter file, or a scenario file with a "params" member.
  std::filesystem::path params;

  std::vector<double> x;
  std::vector<double> lam;
  std::vector<double> m0;
  double t = 1.0;

  std::vector<double> x0;
  double T = 1.0;
  double dt = 1.0 / 256.0;
  std::size_t n = 1;
  std::uint64_t seed = 1;
  /// Positivity mode: faithful | clamp.
  std::string mode = "faithful";
  double eps = 1e-3;
  bool jumps = false;

  std::string scenario;
  std::filesystem::path scenario_dir;
  /// Overrides the scenario path count when nonzero.
  std::size_t paths = 0;
  bool with_timing = false;

  /// Output directory for `simulate`, report file for `verify`.
  std::filesystem::path out;
  std::size_t threads = 0;
};

/// Executes one command. Results go to `out`, diagnostics to `err`.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace cbi::cli
