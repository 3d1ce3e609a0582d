#pragma once

#include <vector>

#include "cbi/params.hpp"
#include "cbi/types.hpp"

namespace cbi {

struct OdeTolerance {
  double rtol = 1e-8;
  double atol = 1e-10;
};

/// Branching mechanism phi(lam), one entry per type.
Vector phi(const AdmissibleParams& p, const DerivedParams& der, const Vector& lam);

/// The same function written with B_tilde and fully compensated jumps.
Vector phi_compensated_form(const AdmissibleParams& p, const DerivedParams& der,
                            const Vector& lam);

/// Immigration mechanism psi(lam) = <beta, lam> + int (1 - e^{-<lam,z>}) nu(dz).
double psi(const AdmissibleParams& p, const Vector& lam);

/// Solution of dv/dt = -phi(v), v(0) = lam, together with int_0^t psi(v(s)) ds.
class RiccatiSolution {
 public:
  static constexpr int dense_order = 4;

  const Vector& lambda0() const { return lambda0_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Vector>& v() const { return v_; }
  const std::vector<double>& psi_accum() const { return psi_; }

  double horizon() const { return grid_.back(); }

  /// Dense-output value of v(t) for t in [0, horizon()].
  Vector v_at(double t) const;
  /// Dense-output value of int_0^t psi(v(s)) ds.
  double psi_integral(double t) const;

 private:
  friend RiccatiSolution solve_v(const AdmissibleParams&, const DerivedParams&, const Vector&,
                                 double, const OdeTolerance&);

  // Coefficients of the quartic interpolant on step k, augmented state.
  struct Dense {
    Vector r1, r2, r3, r4, r5;
  };
  Vector interpolate(double t) const;

  Vector lambda0_;
  std::vector<double> grid_;
  std::vector<Vector> v_;
  std::vector<double> psi_;
  std::vector<Dense> dense_;
};

/// Dormand-Prince 5(4) with PI step control and dense output.
RiccatiSolution solve_v(const AdmissibleParams& p, const DerivedParams& der, const Vector& lam,
                        double T, const OdeTolerance& tol = {});

/// E[exp(-<lam, X_t>) | X_0 = x].
double laplace_transform(const AdmissibleParams& p, const DerivedParams& der, const Vector& x,
                         const Vector& lam, double t, const OdeTolerance& tol = {});

/// Solution of v' = b v - c v^2, v(0) = lam.
double cir_closed_form_v(double c, double b, double lam, double t);

}  // namespace cbi
