#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cbi/error.hpp"
#include "cbi/moments.hpp"
#include "cbi/riccati.hpp"
#include "oracles.hpp"

using namespace cbi;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

AdmissibleParams scalar(double c, double b, double beta) {
  AdmissibleParams p;
  p.d = 1;
  p.c = vec({c});
  p.beta = vec({beta});
  p.B = Matrix::Constant(1, 1, b);
  p.nu = JumpMeasure(1);
  p.mu = {JumpMeasure(1)};
  return p;
}

}  // namespace

TEST(Phi, ZeroAtOrigin) {
  std::mt19937_64 g(1);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 3);
  const DerivedParams der = derive(p);
  EXPECT_EQ(phi(p, der, Vector::Zero(3)), Vector::Zero(3));
  EXPECT_EQ(psi(p, Vector::Zero(3)), 0.0);
}

TEST(Phi, ScalarDiffusion) {
  const AdmissibleParams p = scalar(1, -1, 0);
  EXPECT_DOUBLE_EQ(phi(p, derive(p), vec({2}))[0], 6.0);
}

TEST(Phi, TwoFormsAgreeOnRandomAtoms) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 1 + rep % 3;
    const AdmissibleParams p = cbi::testing::random_atom_params(g, d);
    const DerivedParams der = derive(p);
    Vector lam(static_cast<Eigen::Index>(d));
    for (auto& x : lam) x = u(g);
    const Vector a = phi(p, der, lam);
    const Vector b = phi_compensated_form(p, der, lam);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-10 * std::max(1.0, std::abs(a[i])));
    }
  }
}

TEST(Phi, TwoFormsAgreeOnExponentialAndTempered) {
  AdmissibleParams p = scalar(0.3, -0.2, 0.1);
  p.d = 2;
  p.c = vec({0.3, 0.5});
  p.beta = vec({0.1, 0.2});
  p.B = Matrix::Zero(2, 2);
  p.B << -0.2, 0.1, 0.3, -0.4;
  p.nu = JumpMeasure(2);
  p.mu = {JumpMeasure(2, {ProductExponential{0.6, vec({1.5, 2.0})}}),
          JumpMeasure(2, {TemperedPowerLawAxis{1, 1.3, 1.0, 0.4}})};
  const DerivedParams der = derive(p);
  const Vector lam = vec({0.8, 1.7});
  const Vector a = phi(p, der, lam);
  const Vector b = phi_compensated_form(p, der, lam);
  EXPECT_NEAR(a[0], b[0], 1e-10 * std::abs(a[0]));
  EXPECT_NEAR(a[1], b[1], 1e-8 * std::abs(a[1]));
}

TEST(Psi, Examples) {
  EXPECT_DOUBLE_EQ(psi(scalar(0, 0, 1), vec({3})), 3.0);
  AdmissibleParams p = scalar(0, 0, 0);
  p.nu = JumpMeasure(1, {DiscreteAtoms{{Atom{vec({1}), 2}}}});
  EXPECT_NEAR(psi(p, vec({1})), 2 * (1 - std::exp(-1.0)), 1e-15);
}

TEST(SolveV, ZeroLambdaStaysZero) {
  std::mt19937_64 g(3);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 2);
  const RiccatiSolution s = solve_v(p, derive(p), Vector::Zero(2), 3.0);
  for (std::size_t k = 0; k < s.grid().size(); ++k) {
    EXPECT_EQ(s.v()[k], Vector::Zero(2));
    EXPECT_EQ(s.psi_accum()[k], 0.0);
  }
}

TEST(SolveV, PureDiffusionClosedForm) {
  const AdmissibleParams p = scalar(1, 0, 0);
  for (double lam : {0.5, 2.0}) {
    const RiccatiSolution s = solve_v(p, derive(p), vec({lam}), 5.0);
    for (double t : {0.1, 1.0, 5.0}) {
      EXPECT_NEAR(s.v_at(t)[0], lam / (1 + lam * t), 1e-8 * lam / (1 + lam * t));
    }
  }
}

TEST(SolveV, LinearCase) {
  const AdmissibleParams p = scalar(0, -0.7, 0);
  const RiccatiSolution s = solve_v(p, derive(p), vec({1.5}), 2.0);
  for (double t : {0.3, 1.0, 2.0}) {
    EXPECT_NEAR(s.v_at(t)[0], 1.5 * std::exp(-0.7 * t), 1e-8);
  }
}

TEST(SolveV, DenseOutputContinuousAtNodesAndNonnegative) {
  std::mt19937_64 g(5);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 3);
  const RiccatiSolution s = solve_v(p, derive(p), vec({1, 2, 0.5}), 2.0);
  EXPECT_EQ(s.v().front(), vec({1, 2, 0.5}));
  for (std::size_t k = 1; k < s.grid().size(); ++k) {
    EXPECT_LE((s.v_at(s.grid()[k]) - s.v()[k]).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GE(s.psi_accum()[k], s.psi_accum()[k - 1]);
    EXPECT_TRUE((s.v()[k].array() >= 0).all());
  }
  for (int q = 0; q <= 200; ++q) EXPECT_TRUE((s.v_at(q * 0.01).array() >= 0).all());
}

TEST(SolveV, DenseOutputAccuracyBetweenNodes) {
  const AdmissibleParams p = scalar(1, -1, 0);
  const RiccatiSolution s = solve_v(p, derive(p), vec({3.0}), 4.0);
  for (int q = 1; q < 400; ++q) {
    const double t = q * 0.01;
    EXPECT_NEAR(s.v_at(t)[0], cir_closed_form_v(1, -1, 3.0, t), 1e-7);
  }
}

TEST(SolveV, MonotoneInLambda) {
  std::mt19937_64 g(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 10; ++rep) {
    const AdmissibleParams p = cbi::testing::random_atom_params(g, 2);
    const DerivedParams der = derive(p);
    const Vector lo = vec({u(g), u(g)});
    const Vector hi = lo + vec({u(g), u(g)});
    const Vector a = solve_v(p, der, lo, 1.5).v().back();
    const Vector b = solve_v(p, der, hi, 1.5).v().back();
    EXPECT_TRUE((a.array() <= b.array() + 1e-9).all());
  }
}

TEST(SolveV, RejectsBadInput) {
  const AdmissibleParams p = scalar(1, 0, 0);
  EXPECT_THROW(solve_v(p, derive(p), vec({-1}), 1.0), InvalidConfig);
  EXPECT_THROW(solve_v(p, derive(p), vec({1, 1}), 1.0), DimensionMismatch);
  EXPECT_THROW(solve_v(p, derive(p), vec({1}), 0.0), InvalidConfig);
}

TEST(LaplaceTransform, Identities) {
  std::mt19937_64 g(7);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 2);
  const DerivedParams der = derive(p);
  const Vector x = vec({0.3, 1.2});
  const Vector lam = vec({0.5, 0.25});
  EXPECT_EQ(laplace_transform(p, der, x, lam, 0.0), std::exp(-x.dot(lam)));
  EXPECT_EQ(laplace_transform(p, der, x, Vector::Zero(2), 1.3), 1.0);
  const double v = laplace_transform(p, der, x, lam, 1.0);
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 1.0);
}

TEST(LaplaceTransform, CirWithImmigration) {
  for (double beta : {0.0, 0.7, 2.0}) {
    const AdmissibleParams p = scalar(1, 0, beta);
    const double x = 1.3, lam = 0.8, t = 1.7;
    const double exact = std::exp(-x * lam / (1 + lam * t)) * std::pow(1 + lam * t, -beta);
    EXPECT_NEAR(laplace_transform(p, derive(p), vec({x}), vec({lam}), t), exact, 1e-9);
  }
}

TEST(LaplaceTransform, AffineInInitialState) {
  std::mt19937_64 g(9);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 3);
  const DerivedParams der = derive(p);
  const Vector lam = vec({0.4, 0.9, 0.2});
  const Vector x1 = vec({0.5, 0.1, 1.0});
  const Vector x2 = vec({0.2, 0.7, 0.3});
  auto L = [&](const Vector& x) { return -std::log(laplace_transform(p, der, x, lam, 1.1)); };
  EXPECT_NEAR(L(x1 + x2), L(x1) + L(x2) - L(Vector::Zero(3)), 1e-10);
}

TEST(LaplaceTransform, FirstMomentDuality) {
  std::mt19937_64 g(10);
  const AdmissibleParams p = cbi::testing::random_atom_params(g, 2);
  const DerivedParams der = derive(p);
  const Vector x = vec({0.6, 1.1});
  const Vector lam = vec({1.0, 2.0}).normalized();
  const double t = 0.8, s = 1e-5;
  OdeTolerance tight{1e-12, 1e-14};
  // Central difference at s over [0, 2s]; log L(0) = 0.
  const double deriv = -std::log(laplace_transform(p, der, x, 2 * s * lam, t, tight)) / (2 * s);
  EXPECT_NEAR(deriv, lam.dot(mean(p, der, x, t)), 1e-4 * std::max(1.0, deriv));
}

TEST(CirClosedForm, Examples) {
  EXPECT_EQ(cir_closed_form_v(1, -1, 2.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(cir_closed_form_v(1, 0, 1, 1), 0.5);
  EXPECT_NEAR(cir_closed_form_v(0, 0.4, 2, 1.5), 2 * std::exp(0.6), 1e-14);
}
