#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "cbi/error.hpp"
#include "cbi/quadrature.hpp"

using cbi::integrate;

TEST(Quadrature, PolynomialIsExact) {
  const auto r = integrate([](double x) { return 3 * x * x - 2 * x + 1; }, -1.0, 2.0);
  EXPECT_NEAR(r.value, 9.0 - 3.0 + 3.0, 1e-13);
}

TEST(Quadrature, ReversedBoundsFlipSign) {
  const auto f = [](double x) { return std::sin(x); };
  EXPECT_NEAR(integrate(f, 0.0, 1.0).value, -integrate(f, 1.0, 0.0).value, 1e-15);
}

TEST(Quadrature, EmptyIntervalIsZero) {
  EXPECT_EQ(integrate([](double) { return 1.0; }, 2.0, 2.0).value, 0.0);
}

TEST(Quadrature, HalfLine) {
  const auto r = integrate([](double x) { return std::exp(-x); }, 0.0,
                           std::numeric_limits<double>::infinity());
  EXPECT_NEAR(r.value, 1.0, 1e-12);
}

TEST(Quadrature, WholeLineGaussian) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto r = integrate([](double x) { return std::exp(-0.5 * x * x); }, -inf, inf);
  EXPECT_NEAR(r.value, std::sqrt(2.0 * std::numbers::pi), 1e-11);
}

TEST(Quadrature, LowerHalfLine) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto r = integrate([](double x) { return std::exp(2.0 * x); }, -inf, 0.0);
  EXPECT_NEAR(r.value, 0.5, 1e-12);
}

TEST(Quadrature, IntegrableEndpointSingularity) {
  const auto r = integrate([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; }, 0.0, 1.0);
  EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(Quadrature, NonFiniteIntegrandThrows) {
  EXPECT_THROW(integrate([](double) { return std::nan(""); }, 0.0, 1.0), cbi::QuadratureFailure);
}

TEST(Quadrature, BudgetExhaustionThrows) {
  cbi::QuadOptions o;
  o.max_intervals = 3;
  o.rel_tol = 1e-14;
  o.abs_tol = 0.0;
  EXPECT_THROW(integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, o),
               cbi::QuadratureFailure);
}

TEST(Quadrature, ErrorEstimateBoundsTrueError) {
  const auto r = integrate([](double x) { return std::cos(30 * x); }, 0.0, 1.0);
  const double exact = std::sin(30.0) / 30.0;
  EXPECT_LE(std::abs(r.value - exact), std::max(r.error, 1e-15));
}
