#include "cbi/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbi/error.hpp"

namespace cbi {
namespace {

void require_lambda(const AdmissibleParams& p, const Vector& lam) {
  if (static_cast<std::size_t>(lam.size()) != p.d) {
    throw DimensionMismatch("lambda has size " + std::to_string(lam.size()) + ", expected " +
                            std::to_string(p.d));
  }
  if (!lam.allFinite() || (lam.array() < 0.0).any()) {
    throw InvalidConfig("lambda must be finite and componentwise >= 0");
  }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kMinFactor = 0.2;  // h_new >= 0.2 h
constexpr double kMaxFactor = 10.0;
constexpr double kMinStep = 1e-14;
constexpr std::size_t kMaxSteps = 1'000'000;

class AugmentedSystem {
 public:
  AugmentedSystem(const AdmissibleParams& p, const DerivedParams& der) : p_(p), der_(der) {}

  // y = (v, accumulated psi); negative v entries are read as 0.
  Vector operator()(const Vector& y) const {
    const auto d = static_cast<Eigen::Index>(p_.d);
    const Vector v = y.head(d).cwiseMax(0.0);
    Vector f(d + 1);
    f.head(d) = -phi(p_, der_, v);
    f[d] = psi(p_, v);
    return f;
  }

 private:
  const AdmissibleParams& p_;
  const DerivedParams& der_;
};

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const OdeTolerance& tol) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sk = tol.atol + tol.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sk;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(err.size()));
}

double initial_step(const AugmentedSystem& f, const Vector& y0, const Vector& f0, double hmax,
                    const OdeTolerance& tol) {
  const auto n = static_cast<double>(y0.size());
  double dnf = 0.0;
  double dny = 0.0;
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    const double sk = tol.atol + tol.rtol * std::abs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  const Vector y1 = y0 + h * f0;
  const Vector f1 = f(y1);
  double der2 = 0.0;
  for (Eigen::Index i = 0; i < y0.size(); ++i) {
    const double sk = tol.atol + tol.rtol * std::abs(y0[i]);
    const double r = (f1[i] - f0[i]) / sk;
    der2 += r * r;
  }
  der2 = std::sqrt(der2 / n) / h;
  const double der12 = std::max(der2, std::sqrt(dnf / n));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, hmax});
}

}  // namespace

Vector phi(const AdmissibleParams& p, const DerivedParams&, const Vector& lam) {
  require_lambda(p, lam);
  const auto d = static_cast<Eigen::Index>(p.d);
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out[i] = p.c[i] * lam[i] * lam[i] - p.B.col(i).dot(lam) +
             exp_branching_integral(p.mu[static_cast<std::size_t>(i)], lam,
                                    static_cast<std::size_t>(i));
  }
  return out;
}

Vector phi_compensated_form(const AdmissibleParams& p, const DerivedParams& der,
                            const Vector& lam) {
  require_lambda(p, lam);
  const auto d = static_cast<Eigen::Index>(p.d);
  Vector out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out[i] = p.c[i] * lam[i] * lam[i] - der.B_tilde.col(i).dot(lam) +
             exp_compensated_integral(p.mu[static_cast<std::size_t>(i)], lam);
  }
  return out;
}

double psi(const AdmissibleParams& p, const Vector& lam) {
  require_lambda(p, lam);
  return p.beta.dot(lam) + exp_immigration_integral(p.nu, lam);
}

Vector RiccatiSolution::interpolate(double t) const {
  if (t <= grid_.front()) {
    Vector y(lambda0_.size() + 1);
    y << lambda0_, 0.0;
    return y;
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.end()) {
    Vector y(lambda0_.size() + 1);
    y << v_.back(), psi_.back();
    return y;
  }
  const std::size_t k = static_cast<std::size_t>(it - grid_.begin()) - 1;
  const double h = grid_[k + 1] - grid_[k];
  const double th = (t - grid_[k]) / h;
  const double th1 = 1.0 - th;
  const Dense& c = dense_[k];
  return c.r1 + th * (c.r2 + th1 * (c.r3 + th * (c.r4 + th1 * c.r5)));
}

Vector RiccatiSolution::v_at(double t) const {
  const Vector y = interpolate(t);
  return y.head(lambda0_.size()).cwiseMax(0.0);
}

double RiccatiSolution::psi_integral(double t) const {
  return std::max(0.0, interpolate(t)[lambda0_.size()]);
}

RiccatiSolution solve_v(const AdmissibleParams& p, const DerivedParams& der, const Vector& lam,
                        double T, const OdeTolerance& tol) {
  require_lambda(p, lam);
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidConfig("solve_v needs a finite T > 0");
  if (!(tol.rtol > 0.0) || !(tol.atol > 0.0)) throw InvalidConfig("tolerances must be positive");

  const auto d = static_cast<Eigen::Index>(p.d);
  const AugmentedSystem f(p, der);

  RiccatiSolution sol;
  sol.lambda0_ = lam;
  sol.grid_.push_back(0.0);
  sol.v_.push_back(lam);
  sol.psi_.push_back(0.0);

  Vector y(d + 1);
  y << lam, 0.0;
  Vector k1 = f(y);
  double t = 0.0;
  double h = initial_step(f, y, k1, T, tol);
  double fac_old = 1e-4;
  bool last_rejected = false;

  for (std::size_t step = 0;; ++step) {
    if (step > kMaxSteps) throw StepSizeUnderflow("Riccati solver exceeded the step budget");
    if (h < kMinStep) {
      throw StepSizeUnderflow("Riccati step size fell below 1e-14 at t = " + std::to_string(t));
    }
    bool final_step = false;
    if (t + h >= T || t + 1.01 * h >= T) {
      h = T - t;
      final_step = true;
    }

    const Vector k2 = f(y + h * a21 * k1);
    const Vector k3 = f(y + h * (a31 * k1 + a32 * k2));
    const Vector k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);

    bool negative = false;
    for (Eigen::Index i = 0; i < d; ++i) {
      if (y1[i] < 0.0) {
        if (y1[i] > -10.0 * tol.atol) {
          y1[i] = 0.0;
        } else {
          negative = true;
        }
      }
    }
    if (negative) {
      h *= 0.5;
      last_rejected = true;
      continue;
    }

    const Vector k7 = f(y1);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y1, tol);
    if (!std::isfinite(en)) {
      h *= 0.5;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(en, 0.2 - kBeta * 0.75);
    if (en <= 1.0) {
      double fac = fac11 / std::pow(fac_old, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxFactor, 1.0 / kMinFactor);
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      fac_old = std::max(en, 1e-4);

      RiccatiSolution::Dense dn;
      const Vector ydiff = y1 - y;
      const Vector bspl = h * k1 - ydiff;
      dn.r1 = y;
      dn.r2 = ydiff;
      dn.r3 = bspl;
      dn.r4 = ydiff - h * k7 - bspl;
      dn.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      sol.dense_.push_back(std::move(dn));

      t = final_step ? T : t + h;
      y = y1;
      k1 = k7;
      sol.grid_.push_back(t);
      sol.v_.push_back(y.head(d));
      sol.psi_.push_back(y[d]);
      last_rejected = false;
      if (final_step) break;
      h = h_new;
    } else {
      h /= std::min(1.0 / kMinFactor, fac11 / kSafety);
      last_rejected = true;
    }
  }
  return sol;
}

double laplace_transform(const AdmissibleParams& p, const DerivedParams& der, const Vector& x,
                         const Vector& lam, double t, const OdeTolerance& tol) {
  require_lambda(p, lam);
  if (static_cast<std::size_t>(x.size()) != p.d) {
    throw DimensionMismatch("x has size " + std::to_string(x.size()) + ", expected " +
                            std::to_string(p.d));
  }
  if (!(t >= 0.0)) throw InvalidConfig("t must be >= 0");
  if (t == 0.0) return std::exp(-x.dot(lam));
  const RiccatiSolution sol = solve_v(p, der, lam, t, tol);
  return std::exp(-x.dot(sol.v().back()) - sol.psi_accum().back());
}

double cir_closed_form_v(double c, double b, double lam, double t) {
  if (t == 0.0) return lam;
  if (b == 0.0) return lam / (1.0 + c * lam * t);
  const double g = std::expm1(b * t) / b;
  return lam * std::exp(b * t) / (1.0 + c * lam * g);
}

}  // namespace cbi
