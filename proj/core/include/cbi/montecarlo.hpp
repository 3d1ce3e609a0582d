#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cbi/params.hpp"
#include "cbi/scenario.hpp"
#include "cbi/simulate.hpp"
#include "cbi/types.hpp"

namespace cbi {

struct McEstimate {
  Vector value;
  Vector std_error;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

/// $CBI_NUM_THREADS when set to a positive integer, else the hardware concurrency.
std::size_t default_thread_count();

/// Paths are processed in fixed chunks and reduced in chunk order, so results do
/// not depend on `threads` (0 selects default_thread_count()).
McEstimate estimate_mean(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                         double t, std::size_t n_paths, const SimConfig& cfg, std::uint64_t seed,
                         std::size_t threads = 0);

/// Mean of exp(-<lam, X_t^+>) over n_paths paths.
McEstimate estimate_laplace(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                            const Vector& lam, double t, std::size_t n_paths, const SimConfig& cfg,
                            std::uint64_t seed, std::size_t threads = 0);

/// Full paths 0..n-1, path k driven by path_rng(seed, k).
std::vector<Path> simulate_paths(const SimulationPlan& plan, const Vector& x0, std::size_t n,
                                 std::uint64_t seed, std::size_t threads = 0);

/// Cap on simulated path-steps for one verification run.
struct Budget {
  std::uint64_t max_path_steps = 4'000'000'000ULL;
};

struct VerifyEntry {
  std::string quantity;
  double analytic = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double raw_z = 0.0;
  /// Excess over the bias allowance in units of the standard error.
  double z = 0.0;
  double bias_allowance = 0.0;
  bool pass = false;
};

struct ComparisonLevel {
  double dt = 0.0;
  std::uint64_t triples = 0;
  std::uint64_t violations = 0;
  double violation_fraction = 0.0;
  double worst_violation = 0.0;
};

struct VerifyReport {
  std::string scenario;
  std::string check;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double z_threshold = 3.0;
  std::vector<VerifyEntry> entries;
  std::vector<ComparisonLevel> levels;
  bool pass = false;
  double runtime_seconds = 0.0;
};

struct VerifyOptions {
  Budget budget;
  std::size_t threads = 0;
  /// Overrides the scenario's path count when nonzero.
  std::size_t n_paths = 0;
};

VerifyReport verify_mean(const Scenario& s, const VerifyOptions& opts = {});
VerifyReport verify_laplace(const Scenario& s, const VerifyOptions& opts = {});
VerifyReport verify_comparison(const Scenario& s, const VerifyOptions& opts = {});

/// Fills the z-scores and pass flag of `e` from its analytic value, estimate,
/// standard error and bias allowance.
void score(VerifyEntry& e, double z_threshold);

}  // namespace cbi
