#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "cbi/measures.hpp"
#include "cbi/params.hpp"
#include "cbi/types.hpp"

namespace cbi {

enum class PositivityMode { PaperFaithful, Clamp };

struct SimConfig {
  double T = 1.0;
  double dt = 1.0 / 256.0;
  /// Jumps of infinite-activity measures below this norm are replaced by their mean.
  double eps_trunc = 1e-3;
  PositivityMode positivity = PositivityMode::PaperFaithful;
  bool record_jumps = false;
};

enum class JumpKind { Immigration, Branching };
enum class SizeClass { Small, Large };

struct JumpEvent {
  double time = 0.0;  // end of the step in which the jump was applied
  JumpKind kind = JumpKind::Immigration;
  std::size_t type = 0;  // branching type j, 0-based
  SizeClass size_class = SizeClass::Small;
  Vector z;
  double u = 0.0;  // thinning mark; NaN for immigration
};

struct Path {
  std::vector<double> grid;
  std::vector<Vector> states;
  std::vector<JumpEvent> jumps;
};

/// Everything a path needs that does not depend on the random stream.
class SimulationPlan {
 public:
  SimulationPlan(const AdmissibleParams& p, const DerivedParams& der, const SimConfig& cfg);

  const SimConfig& config() const { return cfg_; }
  std::size_t dim() const { return d_; }
  std::size_t steps() const { return steps_; }
  double time(std::size_t k) const;
  std::vector<double> grid() const;

  const Vector& c() const { return c_; }
  const Vector& beta() const { return beta_; }
  const Vector& beta_sim() const { return beta_sim_; }
  const Matrix& B_sim() const { return B_sim_; }
  const RegionSampler& immigration() const { return immigration_; }
  const RegionSampler& branching(std::size_t j) const { return branching_[j]; }
  /// int z 1{|z| < eps} mu_j(dz) over the infinite-activity parts of mu_j.
  const Vector& small_jump_mean(std::size_t j) const { return small_mean_[j]; }

 private:
  SimConfig cfg_;
  std::size_t d_;
  std::size_t steps_;
  Vector c_;
  Vector beta_;
  Vector beta_sim_;
  Matrix B_sim_;
  RegionSampler immigration_;
  std::vector<RegionSampler> branching_;
  std::vector<Vector> small_mean_;
};

using StateObserver = std::function<void(std::size_t k, const Vector& x)>;
using PairObserver = std::function<void(std::size_t k, const Vector& x, const Vector& x_prime)>;

/// Runs one path, calling `observe` at every grid index k = 0..steps().
void run_path(const SimulationPlan& plan, const Vector& x0, Rng& rng, const StateObserver& observe,
              std::vector<JumpEvent>* jumps = nullptr);

/// Coupled pair; see simulate_coupled.
void run_coupled(const SimulationPlan& plan, const Vector& beta_prime, const Vector& x0,
                 const Vector& x0_prime, Rng& rng, const PairObserver& observe,
                 std::vector<JumpEvent>* jumps = nullptr,
                 std::vector<JumpEvent>* jumps_prime = nullptr);

Path simulate_path(const SimulationPlan& plan, const Vector& x0, Rng& rng);
Path simulate_path(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                   const SimConfig& cfg, Rng& rng);

/// Same scheme as simulate_path, keeping only X_T.
Vector simulate_terminal(const SimulationPlan& plan, const Vector& x0, Rng& rng);

/// Two solutions driven by the same Gaussian increments and the same Poisson points,
/// the second with immigration drift beta_prime.
std::pair<Path, Path> simulate_coupled(const SimulationPlan& plan, const Vector& beta_prime,
                                       const Vector& x0, const Vector& x0_prime, Rng& rng);
std::pair<Path, Path> simulate_coupled(const AdmissibleParams& p, const DerivedParams& der,
                                       const Vector& beta_prime, const Vector& x0,
                                       const Vector& x0_prime, const SimConfig& cfg, Rng& rng);

}  // namespace cbi
