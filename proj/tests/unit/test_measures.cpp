#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cbi/error.hpp"
#include "cbi/measures.hpp"
#include "oracles.hpp"

using namespace cbi;
using cbi::testing::rel_err;
using cbi::testing::simpson;
using cbi::testing::simpson_log;
using cbi::testing::simpson_polar;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

JumpMeasure atoms1(std::initializer_list<std::pair<double, double>> zw) {
  DiscreteAtoms a;
  for (auto [z, w] : zw) a.atoms.push_back(Atom{vec({z}), w});
  return JumpMeasure(1, {a});
}

JumpMeasure expo(double r, Vector rates) {
  const auto d = static_cast<std::size_t>(rates.size());
  return JumpMeasure(d, {ProductExponential{r, std::move(rates)}});
}

JumpMeasure tempered(std::size_t d, std::size_t axis, double alpha, double theta, double scale) {
  return JumpMeasure(d, {TemperedPowerLawAxis{axis, alpha, theta, scale}});
}

// Integrand of each moment kind, for oracles. `small` says which side of the
// unit sphere z lies on, so quadrature nodes on the sphere are classified exactly.
double kind_value(MomentKind k, const Vector& z, std::size_t i, std::size_t j, bool small) {
  const double n = z.norm();
  const auto ii = static_cast<Eigen::Index>(i);
  switch (k) {
    case MomentKind::OneWedgeNorm: return small ? n : 1.0;
    case MomentKind::NormLarge: return small ? 0.0 : n;
    case MomentKind::CoordLarge: return small ? 0.0 : z[ii];
    case MomentKind::CoordSmall: return small ? z[ii] : 0.0;
    case MomentKind::CoordMinusDeltaPlus: return std::max(0.0, z[ii] - (i == j ? 1.0 : 0.0));
    case MomentKind::OneWedgeCoord: return std::min(1.0, z[ii]);
    case MomentKind::NormSqSmall: return small ? n * n : 0.0;
    case MomentKind::Coord: return z[ii];
    case MomentKind::NormSqWedgeNorm: return small ? n * n : n;
  }
  return 0.0;
}

const MomentKind kAllKinds[] = {MomentKind::OneWedgeNorm,    MomentKind::NormLarge,
                                MomentKind::CoordLarge,      MomentKind::CoordSmall,
                                MomentKind::CoordMinusDeltaPlus, MomentKind::OneWedgeCoord,
                                MomentKind::NormSqSmall,     MomentKind::Coord,
                                MomentKind::NormSqWedgeNorm};

}  // namespace

TEST(TotalMass, SingleAtomLargeRegion) {
  EXPECT_EQ(total_mass(atoms1({{2.0, 3.0}}), Region::large()), 3.0);
  EXPECT_EQ(total_mass(atoms1({{2.0, 3.0}}), Region::small()), 0.0);
}

TEST(TotalMass, ExponentialAll) { EXPECT_DOUBLE_EQ(total_mass(expo(5, vec({1})), Region::all()), 5.0); }

TEST(TotalMass, ExponentialRegionsPartitionMass) {
  const JumpMeasure m = expo(2.0, vec({1.5, 0.7}));
  const double small = total_mass(m, Region::small());
  const double large = total_mass(m, Region::large());
  EXPECT_NEAR(small + large, 2.0, 1e-9);
  // Oracle: quarter disc.
  const double oracle = simpson_polar(
      [](double x, double y) { return 2.0 * 1.5 * 0.7 * std::exp(-1.5 * x - 0.7 * y); }, 0.0, 1.0,
      400, 400);
  EXPECT_LT(rel_err(small, oracle), 1e-8);
}

TEST(TotalMass, TemperedAboveEpsMatchesSimpson) {
  const JumpMeasure m = tempered(1, 0, 0.5, 1.0, 1.0);
  const double got = total_mass(m, Region::above(0.01));
  const auto rho = [](double t) { return std::pow(t, -1.5) * std::exp(-t); };
  const double oracle = simpson_log(rho, 0.01, 80.0, 20000);
  EXPECT_LT(rel_err(got, oracle), 1e-8);
}

TEST(TotalMass, TemperedInfiniteNearOrigin) {
  const JumpMeasure m = tempered(2, 1, 0.5, 1.0, 1.0);
  EXPECT_EQ(total_mass(m, Region::all()), kInf);
  EXPECT_EQ(total_mass(m, Region::small()), kInf);
  EXPECT_TRUE(std::isfinite(total_mass(m, Region::large())));
}

TEST(MomentIntegral, SpecExamples) {
  EXPECT_DOUBLE_EQ(moment_integral(atoms1({{2.0, 3.0}}), MomentKind::CoordMinusDeltaPlus, 0, 0), 3.0);
  EXPECT_DOUBLE_EQ(moment_integral(atoms1({{0.5, 1.0}}), MomentKind::NormSqSmall, 0), 0.25);
  DiscreteAtoms a;
  a.atoms.push_back(Atom{vec({0.0, 2.0}), 1.0});
  EXPECT_EQ(moment_integral(JumpMeasure(2, {a}), MomentKind::Coord, 0), 0.0);
  EXPECT_EQ(moment_integral(tempered(2, 1, 0.5, 1.0, 1.0), MomentKind::Coord, 0), 0.0);
}

TEST(MomentIntegral, AtomsMatchDirectSum) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  DiscreteAtoms a;
  for (int k = 0; k < 6; ++k) a.atoms.push_back(Atom{vec({u(g), u(g), u(g)}), u(g) + 0.1});
  const JumpMeasure m(3, {a});
  for (MomentKind k : kAllKinds) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        double oracle = 0.0;
        for (const Atom& at : a.atoms) oracle += at.w * kind_value(k, at.z, i, j, at.z.norm() < 1);
        EXPECT_NEAR(moment_integral(m, k, i, j), oracle, 1e-13 * (1 + oracle)) << to_string(k);
      }
    }
  }
}

TEST(MomentIntegral, ExponentialOneDimMatchesSimpson) {
  const JumpMeasure m = expo(1.7, vec({0.9}));
  for (MomentKind k : kAllKinds) {
    auto piece = [&](bool small) {
      return [&, small](double t) {
        return 1.7 * 0.9 * std::exp(-0.9 * t) * kind_value(k, vec({t}), 0, 0, small);
      };
    };
    const double oracle = simpson(piece(true), 0, 1, 2000) + simpson(piece(false), 1, 80, 40000);
    EXPECT_LT(rel_err(moment_integral(m, k, 0, 0), oracle), 1e-6) << to_string(k);
  }
}

TEST(MomentIntegral, ExponentialTwoDimMatchesPolarSimpson) {
  const Vector th = vec({1.3, 2.1});
  const JumpMeasure m = expo(0.8, th);
  for (MomentKind k : kAllKinds) {
    for (std::size_t i = 0; i < 2; ++i) {
      const std::size_t j = 1 - i;
      auto piece = [&](bool small) {
        return [&, small](double x, double y) {
          return 0.8 * th[0] * th[1] * std::exp(-th[0] * x - th[1] * y) *
                 kind_value(k, vec({x, y}), i, (k == MomentKind::CoordMinusDeltaPlus) ? i : j,
                            small);
        };
      };
      const double oracle = simpson_polar(piece(true), 0, 1, 600, 600) +
                            simpson_polar(piece(false), 1, 45, 6000, 600);
      const double got =
          moment_integral(m, k, i, (k == MomentKind::CoordMinusDeltaPlus) ? i : j);
      EXPECT_LT(rel_err(got, oracle), 1e-6) << to_string(k) << " i=" << i;
    }
  }
}

TEST(MomentIntegral, TemperedMatchesLogSimpson) {
  const double alpha = 0.7, theta = 1.3, C = 0.9;
  const JumpMeasure m = tempered(2, 1, alpha, theta, C);
  const auto rho = [&](double t) { return C * std::pow(t, -1 - alpha) * std::exp(-theta * t); };
  for (MomentKind k : kAllKinds) {
    if (k == MomentKind::Coord || k == MomentKind::CoordSmall || k == MomentKind::OneWedgeCoord ||
        k == MomentKind::CoordLarge || k == MomentKind::CoordMinusDeltaPlus) {
      EXPECT_EQ(moment_integral(m, k, 0, 0), 0.0);
    }
    auto near = [&](double t) { return rho(t) * kind_value(k, vec({0.0, t}), 1, 1, true); };
    auto far = [&](double t) { return rho(t) * kind_value(k, vec({0.0, t}), 1, 1, false); };
    const double oracle = simpson_log(near, 1e-60, 1.0, 40000) + simpson(far, 1.0, 80.0, 40000);
    EXPECT_LT(rel_err(moment_integral(m, k, 1, 1), oracle), 1e-6) << to_string(k);
  }
}

TEST(MomentIntegral, DivergenceIsInfinite) {
  // alpha >= 1: int (1 ^ z) diverges; alpha >= 2: int z^2 1{z<1} diverges.
  EXPECT_EQ(moment_integral(tempered(1, 0, 1.5, 1, 1), MomentKind::OneWedgeNorm, 0), kInf);
  EXPECT_EQ(moment_integral(tempered(1, 0, 1.0, 1, 1), MomentKind::OneWedgeNorm, 0), kInf);
  EXPECT_EQ(moment_integral(tempered(1, 0, 2.5, 1, 1), MomentKind::NormSqSmall, 0), kInf);
  EXPECT_TRUE(std::isfinite(moment_integral(tempered(1, 0, 1.5, 1, 1), MomentKind::NormSqSmall, 0)));
  EXPECT_TRUE(std::isfinite(moment_integral(tempered(1, 0, 0.9, 1, 1), MomentKind::OneWedgeNorm, 0)));
}

TEST(ExpBranching, SpecExamples) {
  EXPECT_EQ(exp_branching_integral(atoms1({{2, 3}}), vec({0}), 0), 0.0);
  EXPECT_NEAR(exp_branching_integral(atoms1({{2, 3}}), vec({1}), 0), 3 * std::exp(-2.0), 1e-15);
  const double closed = 0.5 - 1.0 + (1.0 - std::exp(-1.0));
  const double oracle = simpson(
      [](double z) { return std::exp(-z) * (std::exp(-z) - 1 + std::min(1.0, z)); }, 0, 1, 2000) +
      simpson([](double z) { return std::exp(-z) * (std::exp(-z) - 1 + 1.0); }, 1, 80, 40000);
  const double got = exp_branching_integral(expo(1, vec({1})), vec({1}), 0);
  EXPECT_NEAR(got, closed, 1e-14);
  EXPECT_LT(rel_err(got, oracle), 1e-8);
}

TEST(ExpBranching, TemperedMatchesOracle) {
  const double alpha = 1.4, theta = 0.8, C = 0.6;
  const JumpMeasure m = tempered(2, 0, alpha, theta, C);
  const Vector lam = vec({0.7, 2.0});
  auto rho = [&](double t) { return C * std::pow(t, -1 - alpha) * std::exp(-theta * t); };
  auto g = [&](double t) { return rho(t) * (std::exp(-0.7 * t) - 1 + 0.7 * std::min(1.0, t)); };
  // Below lo the integrand is C lam^2 t^{1-alpha} / 2 up to O(t^{2-alpha}).
  const double lo = 1e-7;
  const double head = C * 0.49 / 2 * std::pow(lo, 2 - alpha) / (2 - alpha);
  const double oracle = head + simpson_log(g, lo, 1.0, 40000) + simpson(g, 1.0, 100.0, 40000);
  EXPECT_LT(rel_err(exp_branching_integral(m, lam, 0), oracle), 1e-6);
}

TEST(ExpBranching, ConvexAlongRays) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const JumpMeasure m(2, {ProductExponential{0.7, vec({1.1, 2.5})},
                          DiscreteAtoms{{Atom{vec({0.3, 1.7}), 0.4}}},
                          TemperedPowerLawAxis{1, 0.8, 1.0, 0.5}});
  for (int rep = 0; rep < 20; ++rep) {
    const Vector dir = vec({u(g), u(g)});
    const double a = u(g), b = u(g);
    for (std::size_t i = 0; i < 2; ++i) {
      const double fa = exp_branching_integral(m, a * dir, i);
      const double fb = exp_branching_integral(m, b * dir, i);
      const double fm = exp_branching_integral(m, 0.5 * (a + b) * dir, i);
      EXPECT_LE(fm, 0.5 * (fa + fb) + 1e-10);
    }
  }
}

TEST(ExpImmigration, SpecExamples) {
  EXPECT_EQ(exp_immigration_integral(atoms1({{1, 2}}), vec({0})), 0.0);
  EXPECT_NEAR(exp_immigration_integral(atoms1({{1, 2}}), vec({1})), 2 * (1 - std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(exp_immigration_integral(expo(1, vec({2})), vec({2})), 0.5, 1e-15);
}

TEST(ExpImmigration, MonotoneAndPositive) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const JumpMeasure m(2, {ProductExponential{0.7, vec({1.1, 2.5})},
                          TemperedPowerLawAxis{0, 0.6, 1.0, 0.5}});
  for (int rep = 0; rep < 30; ++rep) {
    const Vector lo = vec({u(g), u(g)});
    const Vector hi = lo + vec({u(g), u(g)});
    EXPECT_LE(exp_immigration_integral(m, lo), exp_immigration_integral(m, hi) + 1e-14);
    EXPECT_GT(exp_immigration_integral(m, hi), 0.0);
  }
}

TEST(ExpImmigration, TemperedMatchesOracle) {
  const JumpMeasure m = tempered(1, 0, 0.6, 1.2, 0.8);
  auto g = [](double t) { return 0.8 * std::pow(t, -1.6) * std::exp(-1.2 * t) * (1 - std::exp(-1.5 * t)); };
  // Below lo the integrand is C lam t^{-alpha} up to O(t^{1-alpha}).
  const double lo = 1e-12;
  const double head = 0.8 * 1.5 * std::pow(lo, 0.4) / 0.4;
  const double oracle = head + simpson_log(g, lo, 1.0, 40000) + simpson(g, 1.0, 100.0, 40000);
  EXPECT_LT(rel_err(exp_immigration_integral(m, vec({1.5})), oracle), 1e-7);
}

TEST(ExpCompensated, EqualsBranchingPlusLinearCorrection) {
  const JumpMeasure m(2, {ProductExponential{0.7, vec({1.1, 2.5})},
                          DiscreteAtoms{{Atom{vec({0.3, 1.7}), 0.4}}}});
  const Vector lam = vec({0.4, 1.3});
  for (std::size_t i = 0; i < 2; ++i) {
    double corr = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      const double w = k == i ? moment_integral(m, MomentKind::CoordMinusDeltaPlus, k, i)
                              : moment_integral(m, MomentKind::Coord, k);
      corr += lam[static_cast<Eigen::Index>(k)] * w;
    }
    EXPECT_NEAR(exp_compensated_integral(m, lam), exp_branching_integral(m, lam, i) + corr, 1e-12);
  }
}

TEST(Sample, SingleAtomAlwaysReturned) {
  Rng rng(1);
  const JumpMeasure m = atoms1({{0.7, 2.0}});
  for (int k = 0; k < 100; ++k) EXPECT_EQ(sample(m, Region::all(), rng)[0], 0.7);
}

TEST(Sample, AtomFrequency) {
  Rng rng(5);
  const JumpMeasure m = atoms1({{1, 1}, {3, 3}});
  const RegionSampler s(m, Region::all());
  const int N = 100000;
  int hits = 0;
  for (int k = 0; k < N; ++k) hits += s.draw(rng)[0] == 3.0;
  EXPECT_NEAR(hits / double(N), 0.75, 3 * std::sqrt(0.75 * 0.25 / N));
}

TEST(Sample, ExponentialLargeRegionRespected) {
  Rng rng(9);
  const JumpMeasure m = expo(1.0, vec({2.0, 3.0}));
  const RegionSampler s(m, Region::large());
  for (int k = 0; k < 2000; ++k) EXPECT_GE(s.draw(rng).norm(), 1.0);
}

TEST(Sample, EmptyAndInfiniteRegionsThrow) {
  EXPECT_THROW(RegionSampler(atoms1({{2, 1}}), Region::small()), EmptyRegion);
  EXPECT_THROW(RegionSampler(tempered(1, 0, 0.5, 1, 1), Region::all()), InfiniteMass);
}

namespace {

void expect_region_moments(const JumpMeasure& m, Region region, std::uint64_t seed) {
  const RegionSampler s(m, region);
  const double mass = total_mass(m, region);
  ASSERT_NEAR(s.mass(), mass, 1e-9 * mass);
  const Vector expect = first_moment(m, region.lower(), region.upper()) / mass;
  Rng rng(seed);
  const int N = 100000;
  const auto d = static_cast<Eigen::Index>(m.dim());
  Vector sum = Vector::Zero(d), sq = Vector::Zero(d);
  for (int k = 0; k < N; ++k) {
    const Vector z = s.draw(rng);
    EXPECT_GE(z.norm(), region.lower());
    EXPECT_LT(z.norm(), region.upper());
    sum += z;
    sq += z.cwiseProduct(z);
  }
  const Vector mean = sum / N;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double var = sq[i] / N - mean[i] * mean[i];
    EXPECT_NEAR(mean[i], expect[i], 4 * std::sqrt(var / N) + 1e-12) << "component " << i;
  }
}

}  // namespace

TEST(Sample, RegionMomentsExponential1d) {
  expect_region_moments(expo(1.3, vec({0.8})), Region::small(), 21);
  expect_region_moments(expo(1.3, vec({0.8})), Region::large(), 22);
}

TEST(Sample, RegionMomentsExponential2d) {
  expect_region_moments(expo(0.9, vec({1.2, 0.6})), Region::small(), 23);
  expect_region_moments(expo(0.9, vec({1.2, 0.6})), Region::large(), 24);
}

TEST(Sample, RegionMomentsTempered) {
  expect_region_moments(tempered(2, 1, 0.7, 1.1, 0.8), Region::above(1e-3), 25);
  expect_region_moments(tempered(1, 0, 1.5, 0.5, 0.8), Region::above(0.05), 26);
  expect_region_moments(tempered(1, 0, 1.5, 0.5, 0.8), Region::large(), 27);
}

TEST(Sample, RegionMomentsMixture) {
  const JumpMeasure m(2, {ProductExponential{0.7, vec({1.1, 2.5})},
                          DiscreteAtoms{{Atom{vec({0.3, 1.7}), 0.4}, Atom{vec({0.1, 0.2}), 1.0}}}});
  expect_region_moments(m, Region::all(), 28);
  expect_region_moments(m, Region::small(), 29);
}

TEST(Construction, RejectsInvalidFamilies) {
  EXPECT_THROW(JumpMeasure(1, {DiscreteAtoms{{Atom{vec({1.0}), -1.0}}}}), InvalidConfig);
  EXPECT_THROW(JumpMeasure(1, {DiscreteAtoms{{Atom{vec({0.0}), 1.0}}}}), InvalidConfig);
  EXPECT_THROW(JumpMeasure(2, {DiscreteAtoms{{Atom{vec({1.0}), 1.0}}}}), DimensionMismatch);
  EXPECT_THROW(JumpMeasure(2, {ProductExponential{1.0, vec({1.0})}}), DimensionMismatch);
  EXPECT_THROW(JumpMeasure(1, {ProductExponential{1.0, vec({0.0})}}), InvalidConfig);
  EXPECT_THROW(JumpMeasure(1, {TemperedPowerLawAxis{1, 0.5, 1, 1}}), DimensionMismatch);
  EXPECT_THROW(JumpMeasure(1, {TemperedPowerLawAxis{0, 0.5, -1, 1}}), InvalidConfig);
}
