#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "cbi/quadrature.hpp"
#include "cbi/types.hpp"

namespace cbi {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Regions and moment kinds
// ---------------------------------------------------------------------------

enum class RegionKind { All, SmallJumps, LargeJumps, AboveEps };

/// A norm annulus {lower <= |z| < upper} of U_d = R_+^d \ {0}.
struct Region {
  RegionKind kind = RegionKind::All;
  double eps = 0.0;

  static Region all() { return {RegionKind::All, 0.0}; }
  static Region small() { return {RegionKind::SmallJumps, 0.0}; }
  static Region large() { return {RegionKind::LargeJumps, 0.0}; }
  static Region above(double eps) { return {RegionKind::AboveEps, eps}; }

  double lower() const;
  double upper() const;
};

enum class MomentKind {
  OneWedgeNorm,         // int (1 ^ |z|)
  NormLarge,            // int |z| 1{|z| >= 1}
  CoordLarge,           // int z_i 1{|z| >= 1}
  CoordSmall,           // int z_i 1{|z| < 1}
  CoordMinusDeltaPlus,  // int (z_i - delta_ij)^+
  OneWedgeCoord,        // int (1 ^ z_i)
  NormSqSmall,          // int |z|^2 1{|z| < 1}
  Coord,                // int z_i
  NormSqWedgeNorm,      // int (|z| ^ |z|^2)
};

const char* to_string(MomentKind kind);

// ---------------------------------------------------------------------------
// Parametric families
// ---------------------------------------------------------------------------

struct Atom {
  Vector z;
  double w = 0.0;
};

struct DiscreteAtoms {
  std::vector<Atom> atoms;
};

/// Density r * prod_k theta_k exp(-theta_k z_k) on (0, inf)^d.
struct ProductExponential {
  double total_mass = 0.0;
  Vector rates;
};

/// Density C z^{-1-alpha} exp(-theta z) dz on the open positive half of
/// coordinate axis `axis`. Infinite activity near the origin.
struct TemperedPowerLawAxis {
  std::size_t axis = 0;
  double alpha = 0.5;
  double tempering = 1.0;
  double scale = 1.0;
};

using MeasureFamily = std::variant<DiscreteAtoms, ProductExponential, TemperedPowerLawAxis>;

namespace detail {
struct TailTable;
}

/// One summand of a JumpMeasure, with whatever sampling tables its family
/// needs precomputed at construction.
class MeasureComponent {
 public:
  MeasureComponent(std::size_t dim, MeasureFamily family);

  const MeasureFamily& family() const { return family_; }
  std::size_t dim() const { return dim_; }
  bool finite_activity() const;

  /// m({lower <= |z| < upper}); +inf when divergent.
  double mass(double lower, double upper) const;

  /// int g(z) 1{lower <= |z| < upper} m(dz). Near-origin divergence is
  /// reported as +inf when `detect_divergence` is set.
  double integrate(const std::function<double(std::span<const double>)>& g, double lower,
                   double upper, bool detect_divergence) const;

  double moment(MomentKind kind, std::size_t i, std::size_t j) const;
  double exp_branching(const Vector& lam, std::size_t i) const;
  double exp_immigration(const Vector& lam) const;
  double exp_compensated(const Vector& lam) const;

  /// Draw from m restricted to {lower <= |z| < upper}, normalised. The
  /// caller guarantees the restricted mass is finite and positive.
  void sample(double lower, double upper, Rng& rng, std::span<double> out) const;

 private:
  std::size_t dim_;
  MeasureFamily family_;
  std::shared_ptr<const detail::TailTable> tail_;
};

/// A finite sum of parametric jump measures on U_d. Immutable.
class JumpMeasure {
 public:
  explicit JumpMeasure(std::size_t dim = 1);
  JumpMeasure(std::size_t dim, std::vector<MeasureFamily> parts);

  std::size_t dim() const { return dim_; }
  bool empty() const { return parts_.empty(); }
  bool finite_activity() const;
  std::span<const MeasureComponent> components() const { return parts_; }

 private:
  std::size_t dim_;
  std::vector<MeasureComponent> parts_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

double total_mass(const JumpMeasure& m, Region region);

/// Indices are 0-based. `j` only matters for CoordMinusDeltaPlus.
double moment_integral(const JumpMeasure& m, MomentKind kind, std::size_t i, std::size_t j = 0);

/// int z_i 1{lower <= |z| < upper} m(dz) for every i.
Vector first_moment(const JumpMeasure& m, double lower, double upper);

/// int (exp(-<lam,z>) - 1 + lam_i (1 ^ z_i)) m(dz).
double exp_branching_integral(const JumpMeasure& m, const Vector& lam, std::size_t i);

/// int (1 - exp(-<lam,z>)) m(dz).
double exp_immigration_integral(const JumpMeasure& m, const Vector& lam);

/// int (exp(-<lam,z>) - 1 + <lam,z>) m(dz).
double exp_compensated_integral(const JumpMeasure& m, const Vector& lam);

/// Normalised sampler for a measure restricted per component to
/// {lower_c <= |z| < upper}. Built once, shared freely across threads.
class RegionSampler {
 public:
  RegionSampler() = default;
  RegionSampler(const JumpMeasure& m, Region region);
  /// Finite-activity components keep their whole support; the others are
  /// cut at |z| >= eps.
  static RegionSampler truncated(const JumpMeasure& m, double eps);

  double mass() const { return total_; }
  void draw(Rng& rng, std::span<double> out) const;
  Vector draw(Rng& rng) const;

 private:
  struct Part {
    MeasureComponent component;
    double lower;
    double upper;
    double cumulative;
  };
  std::size_t dim_ = 0;
  std::vector<Part> parts_;
  double total_ = 0.0;
};

Vector sample(const JumpMeasure& m, Region region, Rng& rng);

}  // namespace cbi
