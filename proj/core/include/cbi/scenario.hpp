#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbi/params.hpp"
#include "cbi/types.hpp"

namespace cbi {

struct LaplacePoint {
  double t = 0.0;
  Vector lam;
};

struct ComparisonSpec {
  Vector beta_shift;
  std::size_t n_paths = 10'000;
  double dt = 1.0 / 1024.0;
};

/// Discretisation bias allowance per unit dt for each verified quantity.
struct BiasConstants {
  double mean = 0.0;
  double laplace = 0.0;
};

/// A reference instance with the Monte Carlo settings used to verify it.
struct Scenario {
  std::string name;
  std::string description;
  AdmissibleParams params;
  Vector x0;
  double T = 1.0;
  double dt = 1.0 / 256.0;
  std::size_t n_paths = 100'000;
  std::uint64_t seed = 1;
  std::vector<LaplacePoint> laplace_points;
  BiasConstants bias;
  std::optional<ComparisonSpec> comparison;
};

/// Loads `name_or_path` directly when it names a file, else `<dir>/<name>.json`.
Scenario load_scenario(const std::string& name_or_path, const std::filesystem::path& dir);

/// Directory of the bundled scenarios: $CBI_SCENARIO_DIR if set, else `fallback`.
std::filesystem::path scenario_dir(const std::filesystem::path& fallback);

}  // namespace cbi
