#include "cbi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cbi/error.hpp"
#include "cbi/rng.hpp"

namespace cbi {
namespace {

void check_config(const SimConfig& cfg) {
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw InvalidConfig("T must be finite and > 0");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidConfig("dt must be finite and > 0");
  if (!(cfg.eps_trunc > 0.0) || cfg.eps_trunc > 1.0) {
    throw InvalidConfig("eps_trunc must lie in (0, 1]");
  }
  if (cfg.T / cfg.dt > 1e9) throw InvalidConfig("T / dt exceeds 1e9 steps");
}

void check_state(const SimulationPlan& plan, const Vector& x, const char* name) {
  if (static_cast<std::size_t>(x.size()) != plan.dim()) {
    throw DimensionMismatch(std::string(name) + " has size " + std::to_string(x.size()) +
                            ", expected " + std::to_string(plan.dim()));
  }
  if (!x.allFinite() || (x.array() < 0.0).any()) {
    throw InvalidConfig(std::string(name) + " must be finite and componentwise >= 0");
  }
}

// int z 1{|z| < eps} m(dz) over infinite-activity components of m.
Vector truncated_mean(const JumpMeasure& m, double eps) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(m.dim()));
  for (const auto& comp : m.components()) {
    if (comp.finite_activity()) continue;
    for (std::size_t i = 0; i < m.dim(); ++i) {
      out[static_cast<Eigen::Index>(i)] +=
          comp.integrate([i](std::span<const double> z) { return z[i]; }, 0.0, eps, false);
    }
  }
  return out;
}

SizeClass size_class(const Vector& z) { return z.norm() < 1.0 ? SizeClass::Small : SizeClass::Large; }

// Per-path scratch space, reused across steps.
struct Workspace {
  explicit Workspace(std::size_t d)
      : xi(static_cast<Eigen::Index>(d)),
        xp(static_cast<Eigen::Index>(d)),
        z(static_cast<Eigen::Index>(d)),
        drift(static_cast<Eigen::Index>(d)) {}
  Vector xi;
  Vector xp;
  Vector z;
  Vector drift;
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif{0.0, 1.0};
};

std::span<double> as_span(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void log_jump(std::vector<JumpEvent>* log, double t, JumpKind kind, std::size_t type,
              const Vector& z, double u) {
  if (log == nullptr) return;
  log->push_back(JumpEvent{t, kind, type, size_class(z), z, u});
}

}  // namespace

SimulationPlan::SimulationPlan(const AdmissibleParams& p, const DerivedParams& der,
                               const SimConfig& cfg)
    : cfg_(cfg), d_(p.d) {
  check_config(cfg_);
  check_dimensions(p);
  steps_ = static_cast<std::size_t>(std::ceil(cfg_.T / cfg_.dt - 1e-9));
  steps_ = std::max<std::size_t>(steps_, 1);
  c_ = p.c;
  beta_ = p.beta;
  beta_sim_ = p.beta + truncated_mean(p.nu, cfg_.eps_trunc);
  immigration_ = RegionSampler::truncated(p.nu, cfg_.eps_trunc);

  B_sim_ = der.D;
  branching_.reserve(d_);
  small_mean_.reserve(d_);
  for (std::size_t j = 0; j < d_; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const JumpMeasure& m = p.mu[j];
    for (const auto& comp : m.components()) {
      const double lower = comp.finite_activity() ? 0.0 : cfg_.eps_trunc;
      for (std::size_t i = 0; i < d_; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (lower == 0.0) {
          B_sim_(ii, jj) -= comp.moment(MomentKind::CoordSmall, i, i);
        } else {
          B_sim_(ii, jj) -=
              comp.integrate([i](std::span<const double> z) { return z[i]; }, lower, 1.0, false);
        }
      }
    }
    branching_.push_back(RegionSampler::truncated(m, cfg_.eps_trunc));
    small_mean_.push_back(truncated_mean(m, cfg_.eps_trunc));
  }
  if (!B_sim_.allFinite() || !beta_sim_.allFinite()) {
    throw InvalidConfig("simulation drift is not finite; check admissibility");
  }
}

double SimulationPlan::time(std::size_t k) const {
  return k >= steps_ ? cfg_.T : static_cast<double>(k) * cfg_.dt;
}

std::vector<double> SimulationPlan::grid() const {
  std::vector<double> g(steps_ + 1);
  for (std::size_t k = 0; k <= steps_; ++k) g[k] = time(k);
  return g;
}

void run_path(const SimulationPlan& plan, const Vector& x0, Rng& rng, const StateObserver& observe,
              std::vector<JumpEvent>* jumps) {
  check_state(plan, x0, "x0");
  const std::size_t d = plan.dim();
  const auto n = static_cast<Eigen::Index>(d);
  const bool clamp = plan.config().positivity == PositivityMode::Clamp;
  const double nu_rate = plan.immigration().mass();
  Workspace w(d);
  Vector x = x0;
  if (observe) observe(0, x);
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    const double t0 = plan.time(k);
    const double t1 = plan.time(k + 1);
    const double h = t1 - t0;
    const double sqrt_h = std::sqrt(h);
    w.xp = x.cwiseMax(0.0);
    for (Eigen::Index i = 0; i < n; ++i) w.xi[i] = w.normal(rng);

    w.drift.noalias() = plan.B_sim() * w.xp;
    w.drift += plan.beta_sim();
    x += h * w.drift;
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] += std::sqrt(2.0 * plan.c()[i] * w.xp[i]) * sqrt_h * w.xi[i];
    }

    const std::uint64_t k_imm = poisson(rng, nu_rate * h);
    for (std::uint64_t q = 0; q < k_imm; ++q) {
      plan.immigration().draw(rng, as_span(w.z));
      x += w.z;
      log_jump(jumps, t1, JumpKind::Immigration, 0, w.z,
               std::numeric_limits<double>::quiet_NaN());
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const RegionSampler& s = plan.branching(j);
      const double cap = w.xp[jj];
      const std::uint64_t k_br = poisson(rng, cap * s.mass() * h);
      for (std::uint64_t q = 0; q < k_br; ++q) {
        const double u = cap * w.unif(rng);
        s.draw(rng, as_span(w.z));
        x += w.z;
        log_jump(jumps, t1, JumpKind::Branching, j, w.z, u);
      }
    }
    if (clamp) x = x.cwiseMax(0.0);
    if (observe) observe(k + 1, x);
  }
}

void run_coupled(const SimulationPlan& plan, const Vector& beta_prime, const Vector& x0,
                 const Vector& x0_prime, Rng& rng, const PairObserver& observe,
                 std::vector<JumpEvent>* jumps, std::vector<JumpEvent>* jumps_prime) {
  check_state(plan, x0, "x0");
  check_state(plan, x0_prime, "x0_prime");
  if (static_cast<std::size_t>(beta_prime.size()) != plan.dim()) {
    throw DimensionMismatch("beta_prime has the wrong size");
  }
  if ((beta_prime.array() < plan.beta().array()).any()) {
    throw PreconditionViolated("coupling needs beta <= beta_prime componentwise");
  }
  if ((x0_prime.array() < x0.array()).any()) {
    throw PreconditionViolated("coupling needs x0 <= x0_prime componentwise");
  }
  const std::size_t d = plan.dim();
  const auto n = static_cast<Eigen::Index>(d);
  const bool clamp = plan.config().positivity == PositivityMode::Clamp;
  const double nu_rate = plan.immigration().mass();
  const Vector beta_sim_prime = plan.beta_sim() + (beta_prime - plan.beta());
  Workspace w(d);
  Vector xpp(n);
  Vector x = x0;
  Vector y = x0_prime;
  if (observe) observe(0, x, y);
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    const double t0 = plan.time(k);
    const double t1 = plan.time(k + 1);
    const double h = t1 - t0;
    const double sqrt_h = std::sqrt(h);
    w.xp = x.cwiseMax(0.0);
    xpp = y.cwiseMax(0.0);
    for (Eigen::Index i = 0; i < n; ++i) w.xi[i] = w.normal(rng);

    w.drift.noalias() = plan.B_sim() * w.xp;
    x += h * (w.drift + plan.beta_sim());
    w.drift.noalias() = plan.B_sim() * xpp;
    y += h * (w.drift + beta_sim_prime);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sqrt_h * w.xi[i];
      x[i] += std::sqrt(2.0 * plan.c()[i] * w.xp[i]) * s;
      y[i] += std::sqrt(2.0 * plan.c()[i] * xpp[i]) * s;
    }

    const std::uint64_t k_imm = poisson(rng, nu_rate * h);
    for (std::uint64_t q = 0; q < k_imm; ++q) {
      plan.immigration().draw(rng, as_span(w.z));
      x += w.z;
      y += w.z;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      log_jump(jumps, t1, JumpKind::Immigration, 0, w.z, nan);
      log_jump(jumps_prime, t1, JumpKind::Immigration, 0, w.z, nan);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const RegionSampler& s = plan.branching(j);
      const double cap = std::max(w.xp[jj], xpp[jj]);
      const std::uint64_t k_br = poisson(rng, cap * s.mass() * h);
      for (std::uint64_t q = 0; q < k_br; ++q) {
        const double u = cap * w.unif(rng);
        s.draw(rng, as_span(w.z));
        if (u < w.xp[jj]) {
          x += w.z;
          log_jump(jumps, t1, JumpKind::Branching, j, w.z, u);
        }
        if (u < xpp[jj]) {
          y += w.z;
          log_jump(jumps_prime, t1, JumpKind::Branching, j, w.z, u);
        }
      }
    }
    if (clamp) {
      x = x.cwiseMax(0.0);
      y = y.cwiseMax(0.0);
    }
    if (observe) observe(k + 1, x, y);
  }
}

Path simulate_path(const SimulationPlan& plan, const Vector& x0, Rng& rng) {
  Path path;
  path.grid = plan.grid();
  path.states.reserve(plan.steps() + 1);
  run_path(
      plan, x0, rng, [&](std::size_t, const Vector& x) { path.states.push_back(x); },
      plan.config().record_jumps ? &path.jumps : nullptr);
  return path;
}

Path simulate_path(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                   const SimConfig& cfg, Rng& rng) {
  return simulate_path(SimulationPlan(p, der, cfg), x0, rng);
}

Vector simulate_terminal(const SimulationPlan& plan, const Vector& x0, Rng& rng) {
  Vector out;
  run_path(plan, x0, rng, [&](std::size_t k, const Vector& x) {
    if (k == plan.steps()) out = x;
  });
  return out;
}

std::pair<Path, Path> simulate_coupled(const SimulationPlan& plan, const Vector& beta_prime,
                                       const Vector& x0, const Vector& x0_prime, Rng& rng) {
  Path a;
  Path b;
  a.grid = plan.grid();
  b.grid = a.grid;
  a.states.reserve(plan.steps() + 1);
  b.states.reserve(plan.steps() + 1);
  const bool rec = plan.config().record_jumps;
  run_coupled(
      plan, beta_prime, x0, x0_prime, rng,
      [&](std::size_t, const Vector& x, const Vector& y) {
        a.states.push_back(x);
        b.states.push_back(y);
      },
      rec ? &a.jumps : nullptr, rec ? &b.jumps : nullptr);
  return {std::move(a), std::move(b)};
}

std::pair<Path, Path> simulate_coupled(const AdmissibleParams& p, const DerivedParams& der,
                                       const Vector& beta_prime, const Vector& x0,
                                       const Vector& x0_prime, const SimConfig& cfg, Rng& rng) {
  return simulate_coupled(SimulationPlan(p, der, cfg), beta_prime, x0, x0_prime, rng);
}

}  // namespace cbi
