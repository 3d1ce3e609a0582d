#include "cbi/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cbi/error.hpp"

namespace cbi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

double norm_sq(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

// exp(-x) - 1 + x without cancellation for small x.
double em1x(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0);
  }
  return std::expm1(-x) + x;
}

// Q_k(x) = int_x^inf t^k e^{-t} dt and P_k(x) = int_0^x t^k e^{-t} dt, k = 0, 1, 2.
double upper_gamma_int(int k, double x) {
  if (std::isinf(x)) return 0.0;
  const double e = std::exp(-x);
  switch (k) {
    case 0: return e;
    case 1: return e * (1.0 + x);
    default: return e * (x * x + 2.0 * x + 2.0);
  }
}

double lower_gamma_int(int k, double x) {
  if (x > 0.5) {
    const double full = (k == 2) ? 2.0 : 1.0;
    return full - upper_gamma_int(k, x);
  }
  // Alternating series sum_n (-1)^n x^{n+k+1} / (n! (n+k+1)).
  double term = std::pow(x, k + 1);
  double sum = 0.0;
  for (int n = 0; n < 40; ++n) {
    sum += term / (n + k + 1);
    term *= -x / (n + 1);
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// int_lo^hi z^k theta e^{-theta z} dz
double exp_power_moment(int k, double theta, double lo, double hi) {
  const double a = theta * lo;
  const double b = theta * hi;
  double core;
  if (b <= 1.0) {
    core = lower_gamma_int(k, b) - lower_gamma_int(k, a);
  } else {
    core = upper_gamma_int(k, a) - upper_gamma_int(k, b);
  }
  return core / std::pow(theta, k);
}

struct KindParts {
  std::function<double(std::span<const double>)> small;
  std::function<double(std::span<const double>)> large;
};

KindParts kind_parts(MomentKind kind, std::size_t i, std::size_t j) {
  using Fn = std::function<double(std::span<const double>)>;
  const Fn nrm = [](std::span<const double> z) { return norm(z); };
  const Fn nrm2 = [](std::span<const double> z) { return norm_sq(z); };
  const Fn one = [](std::span<const double>) { return 1.0; };
  const Fn coord = [i](std::span<const double> z) { return z[i]; };
  switch (kind) {
    case MomentKind::OneWedgeNorm: return {nrm, one};
    case MomentKind::NormLarge: return {nullptr, nrm};
    case MomentKind::CoordLarge: return {nullptr, coord};
    case MomentKind::CoordSmall: return {coord, nullptr};
    case MomentKind::CoordMinusDeltaPlus: {
      const double delta = (i == j) ? 1.0 : 0.0;
      Fn f = [i, delta](std::span<const double> z) { return std::max(z[i] - delta, 0.0); };
      return {i == j ? nullptr : f, f};
    }
    case MomentKind::OneWedgeCoord: {
      Fn f = [i](std::span<const double> z) { return std::min(1.0, z[i]); };
      return {coord, f};
    }
    case MomentKind::NormSqSmall: return {nrm2, nullptr};
    case MomentKind::Coord: return {coord, coord};
    case MomentKind::NormSqWedgeNorm: return {nrm2, nrm};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Product exponential: nested quadrature over ball slices
// ---------------------------------------------------------------------------

class NestedExponential {
 public:
  NestedExponential(const ProductExponential& pe,
                    const std::function<double(std::span<const double>)>& g)
      : pe_(pe), g_(g), z_(static_cast<std::size_t>(pe.rates.size()), 0.0) {
    outer_.rel_tol = 1e-10;
    outer_.abs_tol = 1e-15;
    inner_.rel_tol = 1e-12;
    inner_.abs_tol = 1e-17;
  }

  // int over {|z| < radius}
  double ball(double radius) { return pe_.total_mass * ball_level(0, radius); }
  // int over {|z| >= radius}
  double outside(double radius) { return pe_.total_mass * outside_level(0, radius); }

 private:
  std::size_t dim() const { return z_.size(); }
  const QuadOptions& opts(std::size_t k) const { return k == 0 ? outer_ : inner_; }

  double density(std::size_t k, double zk) const {
    const double th = pe_.rates[static_cast<Eigen::Index>(k)];
    return th * std::exp(-th * zk);
  }

  double leaf(std::size_t k, double zk) {
    z_[k] = zk;
    return density(k, zk) * g_(z_);
  }

  double ball_level(std::size_t k, double radius) {
    if (radius <= 0.0) return 0.0;
    if (k + 1 == dim()) {
      return integrate([&](double x) { return leaf(k, x); }, 0.0, radius, opts(k)).value;
    }
    auto slice = [&, k, radius](double phi) {
      const double zk = radius * std::sin(phi);
      const double rest = radius * std::cos(phi);
      z_[k] = zk;
      return density(k, zk) * ball_level(k + 1, rest) * rest;
    };
    return integrate(slice, 0.0, std::numbers::pi / 2.0, opts(k)).value;
  }

  double whole_level(std::size_t k) {
    if (k + 1 == dim()) {
      return integrate([&](double x) { return leaf(k, x); }, 0.0, kInf, opts(k)).value;
    }
    return integrate(
               [&, k](double x) {
                 z_[k] = x;
                 return density(k, x) * whole_level(k + 1);
               },
               0.0, kInf, opts(k))
        .value;
  }

  double outside_level(std::size_t k, double radius) {
    if (radius <= 0.0) return whole_level(k);
    if (k + 1 == dim()) {
      return integrate([&](double x) { return leaf(k, x); }, radius, kInf, opts(k)).value;
    }
    auto slice = [&, k, radius](double phi) {
      const double zk = radius * std::sin(phi);
      const double rest = radius * std::cos(phi);
      z_[k] = zk;
      return density(k, zk) * outside_level(k + 1, rest) * rest;
    };
    auto beyond = [&, k](double x) {
      z_[k] = x;
      return density(k, x) * whole_level(k + 1);
    };
    return integrate(slice, 0.0, std::numbers::pi / 2.0, opts(k)).value +
           integrate(beyond, radius, kInf, opts(k)).value;
  }

  const ProductExponential& pe_;
  const std::function<double(std::span<const double>)>& g_;
  std::vector<double> z_;
  QuadOptions outer_;
  QuadOptions inner_;
};

// ---------------------------------------------------------------------------
// Tempered power law on an axis
// ---------------------------------------------------------------------------

struct AxisKernel {
  const TemperedPowerLawAxis& tp;
  std::size_t dim;

  double log_weight_times_t(double s) const {
    // log(C t^{-alpha} e^{-theta t}) at t = e^s; the extra t is the Jacobian.
    return std::log(tp.scale) - tp.alpha * s - tp.tempering * std::exp(s);
  }
  double density(double t) const {
    return tp.scale * std::pow(t, -1.0 - tp.alpha) * std::exp(-tp.tempering * t);
  }
};

// int_lo^hi g(t e_axis) rho(t) dt with lo, hi in (0, 1]; log substitution.
double axis_near(const AxisKernel& k, const std::function<double(double)>& g, double log_lo,
                 double log_hi, const QuadOptions& opts) {
  auto h = [&](double s) {
    const double t = std::exp(s);
    if (t == 0.0) return 0.0;
    const double gv = g(t);
    if (gv == 0.0) return 0.0;
    const double lw = k.log_weight_times_t(s) + std::log(std::abs(gv));
    const double mag = std::exp(lw);
    return gv > 0.0 ? mag : -mag;
  };
  return integrate(h, log_lo, log_hi, opts).value;
}

double axis_integrate(const AxisKernel& k, const std::function<double(double)>& g, double lo,
                      double hi, bool detect_divergence, const QuadOptions& opts = {}) {
  if (!(hi > lo)) return 0.0;
  double value = 0.0;
  const double near_hi = std::min(hi, 1.0);
  if (lo < near_hi) {
    if (lo <= 0.0) {
      if (detect_divergence) {
        // Shell increments over [b 10^{-3(k+1)}, b 10^{-3k}], k = 0..3.
        std::array<double, 4> inc{};
        const double log_b = std::log(near_hi);
        const double step = 3.0 * std::numbers::ln10;
        for (std::size_t s = 0; s < inc.size(); ++s) {
          inc[s] = std::abs(axis_near(k, g, log_b - step * static_cast<double>(s + 1),
                                      log_b - step * static_cast<double>(s), opts));
        }
        bool growing = true;
        for (std::size_t s = 0; s + 1 < inc.size(); ++s) {
          if (!(inc[s] > 0.0) || inc[s + 1] / inc[s] < 1.0 / 1.5) growing = false;
        }
        if (growing) return kInf;
      }
      value += axis_near(k, g, -kInf, std::log(near_hi), opts);
    } else {
      value += axis_near(k, g, std::log(lo), std::log(near_hi), opts);
    }
  }
  const double far_lo = std::max(lo, 1.0);
  if (hi > far_lo) {
    auto h = [&](double t) { return g(t) * k.density(t); };
    value += integrate(h, far_lo, hi, opts).value;
  }
  return value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tail table for inverse-CDF sampling of the power law
// ---------------------------------------------------------------------------

namespace detail {

/// Monotone cubic (PCHIP) interpolant of y(x) on a strictly increasing grid.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    slope_.assign(n, 0.0);
    std::vector<double> h(n - 1);
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        slope_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double operator()(double x) const {
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * slope_[i] +
           (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * slope_[i + 1];
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

struct TailTable {
  static constexpr double kMinCut = 1e-10;
  static constexpr std::size_t kNodes = 4096;

  double t_max = 0.0;
  Pchip log_tail_of_log_t;   // -log G as a function of log t
  Pchip log_t_of_log_tail;   // inverse

  explicit TailTable(const TemperedPowerLawAxis& tp) {
    t_max = std::max(2.0, 60.0 / tp.tempering);
    const double a = std::log(kMinCut);
    const double b = std::log(t_max);
    std::vector<double> log_t(kNodes);
    for (std::size_t k = 0; k < kNodes; ++k) {
      log_t[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(kNodes - 1);
    }
    AxisKernel kernel{tp, 1};
    auto one = [](double) { return 1.0; };
    QuadOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 0.0;
    std::vector<double> tail(kNodes);
    tail[kNodes - 1] = axis_integrate(kernel, one, t_max, kInf, false, opts);
    for (std::size_t k = kNodes - 1; k-- > 0;) {
      const double lo = std::exp(log_t[k]);
      const double hi = std::exp(log_t[k + 1]);
      tail[k] = tail[k + 1] + axis_integrate(kernel, one, lo, hi, false, opts);
    }
    std::vector<double> neg_log_tail(kNodes);
    for (std::size_t k = 0; k < kNodes; ++k) neg_log_tail[k] = -std::log(tail[k]);
    log_tail_of_log_t = Pchip(log_t, neg_log_tail);
    log_t_of_log_tail = Pchip(neg_log_tail, log_t);
  }

  // G(t) = rho([t, inf)) read off the table.
  double tail(double t) const {
    if (std::isinf(t)) return 0.0;
    return std::exp(-log_tail_of_log_t(std::log(t)));
  }

  double invert(double g) const { return std::exp(log_t_of_log_tail(-std::log(g))); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Region
// ---------------------------------------------------------------------------

double Region::lower() const {
  switch (kind) {
    case RegionKind::All:
    case RegionKind::SmallJumps: return 0.0;
    case RegionKind::LargeJumps: return 1.0;
    case RegionKind::AboveEps: return eps;
  }
  return 0.0;
}

double Region::upper() const { return kind == RegionKind::SmallJumps ? 1.0 : kInf; }

const char* to_string(MomentKind kind) {
  switch (kind) {
    case MomentKind::OneWedgeNorm: return "one_wedge_norm";
    case MomentKind::NormLarge: return "norm_large";
    case MomentKind::CoordLarge: return "coord_large";
    case MomentKind::CoordSmall: return "coord_small";
    case MomentKind::CoordMinusDeltaPlus: return "coord_minus_delta_plus";
    case MomentKind::OneWedgeCoord: return "one_wedge_coord";
    case MomentKind::NormSqSmall: return "norm_sq_small";
    case MomentKind::Coord: return "coord";
    case MomentKind::NormSqWedgeNorm: return "norm_sq_wedge_norm";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// MeasureComponent
// ---------------------------------------------------------------------------

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_family(std::size_t dim, const MeasureFamily& family) {
  std::visit(Overloaded{
                 [dim](const DiscreteAtoms& f) {
                   for (const Atom& a : f.atoms) {
                     if (static_cast<std::size_t>(a.z.size()) != dim) {
                       throw DimensionMismatch("atom location has dimension " +
                                               std::to_string(a.z.size()) + ", expected " +
                                               std::to_string(dim));
                     }
                     if (!(a.w > 0.0) || !std::isfinite(a.w)) {
                       throw InvalidConfig("atom weights must be positive and finite");
                     }
                     if (!a.z.allFinite() || (a.z.array() < 0.0).any() ||
                         (a.z.array() == 0.0).all()) {
                       throw InvalidConfig("atoms must lie in R_+^d without the origin");
                     }
                   }
                 },
                 [dim](const ProductExponential& f) {
                   if (static_cast<std::size_t>(f.rates.size()) != dim) {
                     throw DimensionMismatch("exponential rates have dimension " +
                                             std::to_string(f.rates.size()) + ", expected " +
                                             std::to_string(dim));
                   }
                   if (!(f.total_mass > 0.0) || !std::isfinite(f.total_mass) ||
                       !f.rates.allFinite() || !(f.rates.array() > 0.0).all()) {
                     throw InvalidConfig("product exponential needs r > 0 and rates > 0");
                   }
                 },
                 [dim](const TemperedPowerLawAxis& f) {
                   if (f.axis >= dim) {
                     throw DimensionMismatch("power-law axis " + std::to_string(f.axis) +
                                             " out of range for dimension " + std::to_string(dim));
                   }
                   if (!(f.alpha > 0.0) || !(f.tempering > 0.0) || !(f.scale > 0.0) ||
                       !std::isfinite(f.alpha) || !std::isfinite(f.tempering) ||
                       !std::isfinite(f.scale)) {
                     throw InvalidConfig("power law needs alpha, theta, C > 0");
                   }
                 },
             },
             family);
}

}  // namespace

MeasureComponent::MeasureComponent(std::size_t dim, MeasureFamily family)
    : dim_(dim), family_(std::move(family)) {
  check_family(dim_, family_);
  if (const auto* tp = std::get_if<TemperedPowerLawAxis>(&family_)) {
    tail_ = std::make_shared<const detail::TailTable>(*tp);
  }
}

bool MeasureComponent::finite_activity() const {
  return !std::holds_alternative<TemperedPowerLawAxis>(family_);
}

double MeasureComponent::integrate(const std::function<double(std::span<const double>)>& g,
                                   double lower, double upper, bool detect_divergence) const {
  if (!(upper > lower)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double s = 0.0;
            for (const Atom& a : f.atoms) {
              const std::span<const double> z(a.z.data(), static_cast<std::size_t>(a.z.size()));
              const double r = norm(z);
              if (r >= lower && r < upper) s += a.w * g(z);
            }
            return s;
          },
          [&](const ProductExponential& f) {
            if (dim_ == 1) {
              std::array<double, 1> z{};
              auto h = [&](double t) {
                z[0] = t;
                return f.total_mass * f.rates[0] * std::exp(-f.rates[0] * t) * g(z);
              };
              return cbi::integrate(h, lower, upper).value;
            }
            NestedExponential nested(f, g);
            if (std::isinf(upper)) return nested.outside(lower);
            return nested.ball(upper) - (lower > 0.0 ? nested.ball(lower) : 0.0);
          },
          [&](const TemperedPowerLawAxis& f) {
            std::vector<double> z(dim_, 0.0);
            auto h = [&](double t) {
              z[f.axis] = t;
              return g(z);
            };
            return axis_integrate(AxisKernel{f, dim_}, h, lower, upper, detect_divergence);
          },
      },
      family_);
}

double MeasureComponent::mass(double lower, double upper) const {
  if (!(upper > lower)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double s = 0.0;
            for (const Atom& a : f.atoms) {
              const double r = a.z.norm();
              if (r >= lower && r < upper) s += a.w;
            }
            return s;
          },
          [&](const ProductExponential& f) {
            if (lower <= 0.0 && std::isinf(upper)) return f.total_mass;
            if (dim_ == 1) {
              const double th = f.rates[0];
              const double width = std::isinf(upper) ? kInf : upper - lower;
              return f.total_mass * std::exp(-th * lower) * (-std::expm1(-th * width));
            }
            return integrate([](std::span<const double>) { return 1.0; }, lower, upper, false);
          },
          [&](const TemperedPowerLawAxis& f) {
            if (lower <= 0.0) return kInf;
            auto one = [](double) { return 1.0; };
            return axis_integrate(AxisKernel{f, dim_}, one, lower, upper, false);
          },
      },
      family_);
}

double MeasureComponent::moment(MomentKind kind, std::size_t i, std::size_t j) const {
  if (i >= dim_ || j >= dim_) {
    throw DimensionMismatch("moment index out of range");
  }
  // Closed forms for the product exponential where the integrand separates.
  if (const auto* pe = std::get_if<ProductExponential>(&family_)) {
    const double r = pe->total_mass;
    const double th = pe->rates[static_cast<Eigen::Index>(i)];
    switch (kind) {
      case MomentKind::Coord: return r / th;
      case MomentKind::OneWedgeCoord: return r * (-std::expm1(-th)) / th;
      case MomentKind::CoordMinusDeltaPlus: return i == j ? r * std::exp(-th) / th : r / th;
      default: break;
    }
    if (dim_ == 1) {
      auto part = [&](int k, double lo, double hi) { return r * exp_power_moment(k, th, lo, hi); };
      switch (kind) {
        case MomentKind::OneWedgeNorm: return part(1, 0.0, 1.0) + part(0, 1.0, kInf);
        case MomentKind::NormLarge:
        case MomentKind::CoordLarge: return part(1, 1.0, kInf);
        case MomentKind::CoordSmall: return part(1, 0.0, 1.0);
        case MomentKind::NormSqSmall: return part(2, 0.0, 1.0);
        case MomentKind::NormSqWedgeNorm: return part(2, 0.0, 1.0) + part(1, 1.0, kInf);
        default: break;
      }
    }
  }
  if (const auto* tp = std::get_if<TemperedPowerLawAxis>(&family_)) {
    const bool coordinate_kind =
        kind == MomentKind::CoordLarge || kind == MomentKind::CoordSmall ||
        kind == MomentKind::CoordMinusDeltaPlus || kind == MomentKind::OneWedgeCoord ||
        kind == MomentKind::Coord;
    if (coordinate_kind && i != tp->axis) return 0.0;
  }
  const KindParts parts = kind_parts(kind, i, j);
  double value = 0.0;
  if (parts.small) value += integrate(parts.small, 0.0, 1.0, true);
  if (std::isinf(value)) return kInf;
  if (parts.large) value += integrate(parts.large, 1.0, kInf, true);
  return value;
}

double MeasureComponent::exp_branching(const Vector& lam, std::size_t i) const {
  return std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double s = 0.0;
            for (const Atom& a : f.atoms) {
              s += a.w * (std::expm1(-lam.dot(a.z)) + lam[static_cast<Eigen::Index>(i)] *
                                                          std::min(1.0, a.z[static_cast<Eigen::Index>(i)]));
            }
            return s;
          },
          [&](const ProductExponential& f) {
            double log_laplace = 0.0;
            for (Eigen::Index k = 0; k < f.rates.size(); ++k) {
              log_laplace -= std::log1p(lam[k] / f.rates[k]);
            }
            const auto ii = static_cast<Eigen::Index>(i);
            const double th = f.rates[ii];
            return f.total_mass * (std::expm1(log_laplace) + lam[ii] * (-std::expm1(-th)) / th);
          },
          [&](const TemperedPowerLawAxis& f) {
            const double la = lam[static_cast<Eigen::Index>(f.axis)];
            const bool own = (i == f.axis);
            auto g = [la, own](double t) {
              if (!own) return std::expm1(-la * t);
              return t <= 1.0 ? em1x(la * t) : std::expm1(-la * t) + la;
            };
            return axis_integrate(AxisKernel{f, dim_}, g, 0.0, kInf, false);
          },
      },
      family_);
}

double MeasureComponent::exp_immigration(const Vector& lam) const {
  return std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double s = 0.0;
            for (const Atom& a : f.atoms) s -= a.w * std::expm1(-lam.dot(a.z));
            return s;
          },
          [&](const ProductExponential& f) {
            double log_laplace = 0.0;
            for (Eigen::Index k = 0; k < f.rates.size(); ++k) {
              log_laplace -= std::log1p(lam[k] / f.rates[k]);
            }
            return -f.total_mass * std::expm1(log_laplace);
          },
          [&](const TemperedPowerLawAxis& f) {
            const double la = lam[static_cast<Eigen::Index>(f.axis)];
            auto g = [la](double t) { return -std::expm1(-la * t); };
            return axis_integrate(AxisKernel{f, dim_}, g, 0.0, kInf, false);
          },
      },
      family_);
}

double MeasureComponent::exp_compensated(const Vector& lam) const {
  return std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double s = 0.0;
            for (const Atom& a : f.atoms) s += a.w * em1x(lam.dot(a.z));
            return s;
          },
          [&](const ProductExponential& f) {
            double log_laplace = 0.0;
            double linear = 0.0;
            for (Eigen::Index k = 0; k < f.rates.size(); ++k) {
              log_laplace -= std::log1p(lam[k] / f.rates[k]);
              linear += lam[k] / f.rates[k];
            }
            return f.total_mass * (std::expm1(log_laplace) + linear);
          },
          [&](const TemperedPowerLawAxis& f) {
            const double la = lam[static_cast<Eigen::Index>(f.axis)];
            auto g = [la](double t) { return em1x(la * t); };
            return axis_integrate(AxisKernel{f, dim_}, g, 0.0, kInf, false);
          },
      },
      family_);
}

void MeasureComponent::sample(double lower, double upper, Rng& rng, std::span<double> out) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::visit(
      Overloaded{
          [&](const DiscreteAtoms& f) {
            double total = 0.0;
            for (const Atom& a : f.atoms) {
              const double r = a.z.norm();
              if (r >= lower && r < upper) total += a.w;
            }
            if (!(total > 0.0)) throw EmptyRegion("no atom inside the requested region");
            double target = unif(rng) * total;
            const Atom* pick = nullptr;
            for (const Atom& a : f.atoms) {
              const double r = a.z.norm();
              if (r >= lower && r < upper) {
                pick = &a;
                target -= a.w;
                if (target < 0.0) break;
              }
            }
            for (std::size_t k = 0; k < dim_; ++k) out[k] = pick->z[static_cast<Eigen::Index>(k)];
          },
          [&](const ProductExponential& f) {
            if (dim_ == 1) {
              const double th = f.rates[0];
              const double width = std::isinf(upper) ? kInf : upper - lower;
              const double span_mass = -std::expm1(-th * width);
              out[0] = lower - std::log1p(-unif(rng) * span_mass) / th;
              if (!std::isinf(upper)) out[0] = std::min(out[0], std::nextafter(upper, 0.0));
              return;
            }
            const bool bounded = !std::isinf(upper);
            for (std::size_t attempt = 0; attempt < 10'000'000; ++attempt) {
              for (std::size_t k = 0; k < dim_; ++k) {
                const double th = f.rates[static_cast<Eigen::Index>(k)];
                const double cap = bounded ? -std::expm1(-th * upper) : 1.0;
                out[k] = -std::log1p(-unif(rng) * cap) / th;
              }
              const double r = norm(out);
              if (r >= lower && r < upper) return;
            }
            throw EmptyRegion("rejection sampler failed to hit the requested region");
          },
          [&](const TemperedPowerLawAxis& f) {
            if (lower < detail::TailTable::kMinCut) {
              throw InfiniteMass("power-law sampling needs a cut of at least 1e-10");
            }
            const double g_lo = tail_->tail(lower);
            const double g_hi = tail_->tail(upper);
            const double u = g_hi + (g_lo - g_hi) * (1.0 - unif(rng));
            double t = tail_->invert(u);
            t = std::clamp(t, lower, std::isinf(upper) ? tail_->t_max : upper);
            std::fill(out.begin(), out.end(), 0.0);
            out[f.axis] = t;
          },
      },
      family_);
}

// ---------------------------------------------------------------------------
// JumpMeasure and free operations
// ---------------------------------------------------------------------------

JumpMeasure::JumpMeasure(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw DimensionMismatch("measure dimension must be positive");
}

JumpMeasure::JumpMeasure(std::size_t dim, std::vector<MeasureFamily> parts) : JumpMeasure(dim) {
  parts_.reserve(parts.size());
  for (auto& p : parts) parts_.emplace_back(dim, std::move(p));
}

bool JumpMeasure::finite_activity() const {
  return std::all_of(parts_.begin(), parts_.end(),
                     [](const MeasureComponent& c) { return c.finite_activity(); });
}

double total_mass(const JumpMeasure& m, Region region) {
  double s = 0.0;
  for (const auto& c : m.components()) s += c.mass(region.lower(), region.upper());
  return s;
}

double moment_integral(const JumpMeasure& m, MomentKind kind, std::size_t i, std::size_t j) {
  if (i >= m.dim() || j >= m.dim()) throw DimensionMismatch("moment index out of range");
  double s = 0.0;
  for (const auto& c : m.components()) {
    s += c.moment(kind, i, j);
    if (std::isinf(s)) return kInf;
  }
  return s;
}

Vector first_moment(const JumpMeasure& m, double lower, double upper) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(m.dim()));
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (const auto& c : m.components()) {
      if (const auto* tp = std::get_if<TemperedPowerLawAxis>(&c.family()); tp && tp->axis != i) {
        continue;
      }
      if (lower <= 0.0 && std::isinf(upper)) {
        out[ii] += c.moment(MomentKind::Coord, i, i);
      } else if (lower <= 0.0 && upper == 1.0) {
        out[ii] += c.moment(MomentKind::CoordSmall, i, i);
      } else if (lower == 1.0 && std::isinf(upper)) {
        out[ii] += c.moment(MomentKind::CoordLarge, i, i);
      } else {
        out[ii] += c.integrate([i](std::span<const double> z) { return z[i]; }, lower, upper,
                               true);
      }
    }
  }
  return out;
}

double exp_branching_integral(const JumpMeasure& m, const Vector& lam, std::size_t i) {
  if (static_cast<std::size_t>(lam.size()) != m.dim() || i >= m.dim()) {
    throw DimensionMismatch("exp_branching_integral: dimension mismatch");
  }
  double s = 0.0;
  for (const auto& c : m.components()) s += c.exp_branching(lam, i);
  return s;
}

double exp_immigration_integral(const JumpMeasure& m, const Vector& lam) {
  if (static_cast<std::size_t>(lam.size()) != m.dim()) {
    throw DimensionMismatch("exp_immigration_integral: dimension mismatch");
  }
  double s = 0.0;
  for (const auto& c : m.components()) s += c.exp_immigration(lam);
  return s;
}

double exp_compensated_integral(const JumpMeasure& m, const Vector& lam) {
  if (static_cast<std::size_t>(lam.size()) != m.dim()) {
    throw DimensionMismatch("exp_compensated_integral: dimension mismatch");
  }
  double s = 0.0;
  for (const auto& c : m.components()) s += c.exp_compensated(lam);
  return s;
}

RegionSampler::RegionSampler(const JumpMeasure& m, Region region) : dim_(m.dim()) {
  for (const auto& c : m.components()) {
    const double w = c.mass(region.lower(), region.upper());
    if (std::isinf(w)) throw InfiniteMass("region has infinite mass; sample above some eps > 0");
    if (w > 0.0) {
      total_ += w;
      parts_.push_back(Part{c, region.lower(), region.upper(), total_});
    }
  }
  if (!(total_ > 0.0)) throw EmptyRegion("region has zero mass");
}

RegionSampler RegionSampler::truncated(const JumpMeasure& m, double eps) {
  RegionSampler s;
  s.dim_ = m.dim();
  for (const auto& c : m.components()) {
    const double lower = c.finite_activity() ? 0.0 : eps;
    const double w = c.mass(lower, kInf);
    if (std::isinf(w)) throw InfiniteMass("truncated sampler: infinite mass above eps");
    if (w > 0.0) {
      s.total_ += w;
      s.parts_.push_back(Part{c, lower, kInf, s.total_});
    }
  }
  return s;
}

void RegionSampler::draw(Rng& rng, std::span<double> out) const {
  if (parts_.empty()) throw EmptyRegion("sampler has zero mass");
  const Part* pick = &parts_.front();
  if (parts_.size() > 1) {
    std::uniform_real_distribution<double> unif(0.0, total_);
    const double u = unif(rng);
    for (const Part& p : parts_) {
      pick = &p;
      if (u < p.cumulative) break;
    }
  }
  pick->component.sample(pick->lower, pick->upper, rng, out);
}

Vector RegionSampler::draw(Rng& rng) const {
  Vector z(static_cast<Eigen::Index>(dim_));
  draw(rng, std::span<double>(z.data(), dim_));
  return z;
}

Vector sample(const JumpMeasure& m, Region region, Rng& rng) {
  return RegionSampler(m, region).draw(rng);
}

}  // namespace cbi
