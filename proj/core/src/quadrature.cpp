#include "cbi/quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "cbi/error.hpp"

namespace cbi {
namespace {

// Kronrod abscissae / weights (15 points) and the embedded 7-point Gauss
// weights, as tabulated in QUADPACK's qk15.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Segment {
  double a;
  double b;
  double value;
  double error;
  double floor;  // round-off level of this segment's estimate

  bool operator<(const Segment& other) const { return error < other.error; }
};

double checked(double v) {
  if (!std::isfinite(v)) {
    throw QuadratureFailure("integrand returned a non-finite value");
  }
  return v;
}

Segment gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked(f(center));
  double res_g = fc * kWg[3];
  double res_k = fc * kWgk[7];
  double res_abs = std::abs(res_k);
  std::array<double, 7> f1{};
  std::array<double, 7> f2{};
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = checked(f(center - dx));
    f2[j] = checked(f(center + dx));
    const double sum = f1[j] + f2[j];
    res_k += kWgk[j] * sum;
    res_abs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) {
      res_g += kWg[j / 2] * sum;
    }
  }
  const double mean = 0.5 * res_k;
  double res_asc = kWgk[7] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 7; ++j) {
    res_asc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  }
  const double scale = std::abs(half);
  const double result = res_k * half;
  res_abs *= scale;
  res_asc *= scale;
  double err = std::abs((res_k - res_g) * half);
  if (res_asc != 0.0 && err != 0.0) {
    err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
  }
  const double floor = 50.0 * kEps * res_abs;
  if (res_abs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    err = std::max(floor, err);
  }
  return Segment{a, b, result, err, floor};
}

QuadResult integrate_finite(const std::function<double(double)>& f, double a, double b,
                            const QuadOptions& opts) {
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  double retired_value = 0.0;
  double retired_err = 0.0;
  std::size_t count = 1;
  heap.push(first);

  auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  while (!heap.empty() && total_err > tolerance()) {
    Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.error <= worst.floor * (1.0 + 1e-12) || mid <= worst.a || mid >= worst.b) {
      // Nothing left to gain from splitting this one.
      retired_value += worst.value;
      retired_err += worst.error;
      continue;
    }
    if (count + 1 > opts.max_intervals) {
      throw QuadratureFailure("interval budget of " + std::to_string(opts.max_intervals) +
                              " exhausted; error estimate " + std::to_string(total_err));
    }
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }

  // Re-sum to shed the drift of the incremental updates.
  double value = retired_value;
  double error = retired_err;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return QuadResult{value, error, count};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opts) {
  if (std::isnan(a) || std::isnan(b)) {
    throw QuadratureFailure("NaN integration bound");
  }
  if (a == b) {
    return {};
  }
  if (a > b) {
    QuadResult r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (lo_inf && hi_inf) {
    QuadResult left = integrate(f, a, 0.0, opts);
    QuadResult right = integrate(f, 0.0, b, opts);
    return {left.value + right.value, left.error + right.error, left.intervals + right.intervals};
  }
  if (hi_inf) {
    auto g = [&f, a](double t) {
      const double s = 1.0 - t;
      return f(a + t / s) / (s * s);
    };
    return integrate_finite(g, 0.0, 1.0, opts);
  }
  if (lo_inf) {
    auto g = [&f, b](double t) {
      const double s = 1.0 - t;
      return f(b - t / s) / (s * s);
    };
    return integrate_finite(g, 0.0, 1.0, opts);
  }
  return integrate_finite(f, a, b, opts);
}

}  // namespace cbi
