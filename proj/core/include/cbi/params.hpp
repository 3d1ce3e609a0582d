#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cbi/measures.hpp"
#include "cbi/types.hpp"

namespace cbi {

/// The tuple (d, c, beta, B, nu, mu_1..mu_d) of a multi-type CBI process.
struct AdmissibleParams {
  std::size_t d = 1;
  Vector c;
  Vector beta;
  Matrix B;
  JumpMeasure nu{1};
  std::vector<JumpMeasure> mu;
};

/// Region masses used as thinning rates. Entries may be +inf.
struct JumpRates {
  double nu_total = 0.0;
  double nu_large = 0.0;
  Vector mu_total;
  Vector mu_large;
};

struct DerivedParams {
  Vector beta_tilde;
  Matrix B_tilde;
  Matrix D;
  /// Drift matrix for the scheme that simulates every branching jump.
  Matrix B_hat;
  /// Column j holds int z 1{|z| >= 1} mu_j(dz).
  Matrix large_jump_mean;
  JumpRates rates;
};

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  bool divergent = false;
  std::string citation;
  std::string detail;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Check> checks;

  const Check* find(const std::string& name) const;
};

/// Throws DimensionMismatch when the sizes of c, beta, B, nu and mu disagree with d.
void check_dimensions(const AdmissibleParams& p);

/// Evaluates every admissibility condition. Failure is reported, not thrown.
ValidationReport validate(const AdmissibleParams& p);

DerivedParams derive(const AdmissibleParams& p);

}  // namespace cbi
