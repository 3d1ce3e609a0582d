#pragma once

#include <cstddef>
#include <functional>

namespace cbi {

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  std::size_t max_intervals = 1'000'000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
///
/// Either bound may be infinite; half-lines are mapped onto [0, 1) with
/// x = a + t / (1 - t). Refinement bisects the interval with the largest
/// error estimate until the summed estimate is below
/// max(abs_tol, rel_tol * |I|). Intervals whose error is already at the
/// round-off floor are retired instead of split.
///
/// Throws QuadratureFailure when the interval budget is exhausted or the
/// integrand produces a non-finite value.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts = {});

}  // namespace cbi
