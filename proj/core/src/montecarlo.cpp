#include "cbi/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <cstdio>
#include <string>
#include <thread>

#include "cbi/error.hpp"
#include "cbi/moments.hpp"
#include "cbi/riccati.hpp"
#include "cbi/rng.hpp"

namespace cbi {
namespace {

constexpr std::size_t kChunk = 256;

/// Running mean and sum of squared deviations (Welford), mergeable in a fixed order.
struct Moments {
  std::size_t n = 0;
  Vector mean;
  Vector m2;

  explicit Moments(Eigen::Index dim = 0) : mean(Vector::Zero(dim)), m2(Vector::Zero(dim)) {}

  void add(const Vector& x) {
    ++n;
    const Vector delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double total = na + nb;
    const Vector delta = o.mean - mean;
    mean += delta * (nb / total);
    m2 += o.m2 + delta.cwiseProduct(delta) * (na * nb / total);
    n += o.n;
  }

  Vector std_error() const {
    if (n < 2) return Vector::Zero(mean.size());
    const double nn = static_cast<double>(n);
    return (m2.cwiseMax(0.0) / ((nn - 1.0) * nn)).cwiseSqrt();
  }
};

std::size_t resolve_threads(std::size_t threads) {
  return threads == 0 ? default_thread_count() : threads;
}

/// Runs work(begin, end) over fixed chunks of [0, n) and returns the results in chunk order.
template <class Result, class Work>
std::vector<Result> run_chunks(std::size_t n, std::size_t threads, const Work& work) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Result> results(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      try {
        results[c] = work(c * kChunk, std::min(n, (c + 1) * kChunk));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const std::size_t pool = std::min(resolve_threads(threads), std::max<std::size_t>(chunks, 1));
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> ts;
    ts.reserve(pool);
    for (std::size_t i = 0; i < pool; ++i) ts.emplace_back(worker);
    for (auto& t : ts) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

void check_paths(std::size_t n_paths) {
  if (n_paths < 2) throw InvalidConfig("n_paths must be at least 2");
}

void check_budget(const Budget& b, std::size_t n_paths, std::size_t steps, std::size_t factor = 1) {
  const long double work = static_cast<long double>(n_paths) * steps * factor;
  if (work > static_cast<long double>(b.max_path_steps)) {
    throw BudgetExceeded("run needs " + std::to_string(static_cast<double>(work)) +
                         " path-steps, budget is " + std::to_string(b.max_path_steps));
  }
}

std::size_t grid_index(const SimulationPlan& plan, double t) {
  if (t == 0.0) return 0;
  const double r = t / plan.config().dt;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-9 * std::max(1.0, r) || k > static_cast<double>(plan.steps())) {
    throw InvalidConfig("time " + std::to_string(t) + " is not on the simulation grid");
  }
  return static_cast<std::size_t>(k);
}

/// Mean and standard error of stat(X_{t_k}) at the requested grid indices.
std::vector<Moments> sample_statistics(
    const SimulationPlan& plan, const Vector& x0, std::size_t n_paths, std::uint64_t seed,
    std::size_t threads, const std::vector<std::size_t>& indices,
    const std::vector<std::function<Vector(const Vector&)>>& stats) {
  using Chunk = std::vector<Moments>;
  auto work = [&](std::size_t begin, std::size_t end) {
    Chunk acc;
    for (std::size_t q = 0; q < indices.size(); ++q) {
      acc.emplace_back(stats[q](x0).size());
    }
    for (std::size_t path = begin; path < end; ++path) {
      Rng rng = path_rng(seed, path);
      run_path(plan, x0, rng, [&](std::size_t k, const Vector& x) {
        for (std::size_t q = 0; q < indices.size(); ++q) {
          if (indices[q] == k) acc[q].add(stats[q](x));
        }
      });
    }
    return acc;
  };
  const auto chunks = run_chunks<Chunk>(n_paths, threads, work);
  std::vector<Moments> total;
  for (std::size_t q = 0; q < indices.size(); ++q) total.emplace_back(stats[q](x0).size());
  for (const Chunk& c : chunks) {
    for (std::size_t q = 0; q < indices.size(); ++q) total[q].merge(c[q]);
  }
  return total;
}

SimConfig config_for(double T, double dt) {
  SimConfig cfg;
  cfg.T = T;
  cfg.dt = dt;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string component(const std::string& base, Eigen::Index i) {
  return base + "[" + std::to_string(i + 1) + "]";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::size_t default_thread_count() {
  if (const char* env = std::getenv("CBI_NUM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void score(VerifyEntry& e, double z_threshold) {
  const double diff = e.estimate - e.analytic;
  const double excess = std::max(0.0, std::abs(diff) - e.bias_allowance);
  if (e.std_error > 0.0) {
    e.raw_z = diff / e.std_error;
    e.z = excess / e.std_error;
  } else {
    e.raw_z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    e.z = excess == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  e.pass = e.z <= z_threshold;
}

std::vector<Path> simulate_paths(const SimulationPlan& plan, const Vector& x0, std::size_t n,
                                 std::uint64_t seed, std::size_t threads) {
  using Chunk = std::vector<Path>;
  auto work = [&](std::size_t begin, std::size_t end) {
    Chunk out;
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng = path_rng(seed, k);
      out.push_back(simulate_path(plan, x0, rng));
    }
    return out;
  };
  std::vector<Path> paths;
  paths.reserve(n);
  for (Chunk& c : run_chunks<Chunk>(n, threads, work)) {
    for (Path& p : c) paths.push_back(std::move(p));
  }
  return paths;
}

McEstimate estimate_mean(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                         double t, std::size_t n_paths, const SimConfig& cfg, std::uint64_t seed,
                         std::size_t threads) {
  check_paths(n_paths);
  McEstimate out;
  out.n_paths = n_paths;
  out.dt = cfg.dt;
  out.seed = seed;
  if (t == 0.0) {
    out.value = x0;
    out.std_error = Vector::Zero(x0.size());
    return out;
  }
  SimConfig run = cfg;
  run.T = t;
  run.record_jumps = false;
  const SimulationPlan plan(p, der, run);
  const auto m = sample_statistics(plan, x0, n_paths, seed, threads, {plan.steps()},
                                   {[](const Vector& x) { return x; }});
  out.value = m[0].mean;
  out.std_error = m[0].std_error();
  return out;
}

McEstimate estimate_laplace(const AdmissibleParams& p, const DerivedParams& der, const Vector& x0,
                            const Vector& lam, double t, std::size_t n_paths, const SimConfig& cfg,
                            std::uint64_t seed, std::size_t threads) {
  check_paths(n_paths);
  if (static_cast<std::size_t>(lam.size()) != p.d || static_cast<std::size_t>(x0.size()) != p.d) {
    throw DimensionMismatch("estimate_laplace: x0 and lam must have size d");
  }
  McEstimate out;
  out.n_paths = n_paths;
  out.dt = cfg.dt;
  out.seed = seed;
  out.std_error = Vector::Zero(1);
  if (t == 0.0 || (lam.array() == 0.0).all()) {
    out.value = Vector::Constant(1, std::exp(-x0.cwiseMax(0.0).dot(lam)));
    return out;
  }
  SimConfig run = cfg;
  run.T = t;
  run.record_jumps = false;
  const SimulationPlan plan(p, der, run);
  auto stat = [&lam](const Vector& x) {
    return Vector::Constant(1, std::exp(-x.cwiseMax(0.0).dot(lam)));
  };
  const auto m = sample_statistics(plan, x0, n_paths, seed, threads, {plan.steps()}, {stat});
  out.value = m[0].mean;
  out.std_error = m[0].std_error();
  return out;
}

VerifyReport verify_mean(const Scenario& s, const VerifyOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = opts.n_paths ? opts.n_paths : s.n_paths;
  check_paths(n);
  const DerivedParams der = derive(s.params);
  const SimulationPlan plan(s.params, der, config_for(s.T, s.dt));
  check_budget(opts.budget, n, plan.steps());

  VerifyReport r;
  r.scenario = s.name;
  r.check = "mean";
  r.n_paths = n;
  r.dt = s.dt;
  r.seed = s.seed;
  const Vector analytic = mean(s.params, der, s.x0, s.T);
  const auto m = sample_statistics(plan, s.x0, n, s.seed, opts.threads, {plan.steps()},
                                   {[](const Vector& x) { return x; }});
  const Vector se = m[0].std_error();
  r.pass = true;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    VerifyEntry e;
    e.quantity = component("E X_T", i);
    e.analytic = analytic[i];
    e.estimate = m[0].mean[i];
    e.std_error = se[i];
    e.bias_allowance = s.bias.mean * s.dt + 1e-12 * (1.0 + std::abs(analytic[i]));
    score(e, r.z_threshold);
    r.pass = r.pass && e.pass;
    r.entries.push_back(e);
  }
  r.runtime_seconds = seconds_since(t0);
  return r;
}

VerifyReport verify_laplace(const Scenario& s, const VerifyOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = opts.n_paths ? opts.n_paths : s.n_paths;
  check_paths(n);
  if (s.laplace_points.empty()) throw InvalidConfig("scenario has no laplace_points");
  const DerivedParams der = derive(s.params);
  double horizon = 0.0;
  for (const auto& pt : s.laplace_points) horizon = std::max(horizon, pt.t);
  if (!(horizon > 0.0)) horizon = s.dt;
  const SimulationPlan plan(s.params, der, config_for(horizon, s.dt));
  check_budget(opts.budget, n, plan.steps());

  std::vector<std::size_t> indices;
  std::vector<std::function<Vector(const Vector&)>> stats;
  for (const auto& pt : s.laplace_points) {
    indices.push_back(grid_index(plan, pt.t));
    const Vector lam = pt.lam;
    stats.emplace_back(
        [lam](const Vector& x) { return Vector::Constant(1, std::exp(-x.cwiseMax(0.0).dot(lam))); });
  }
  const auto m = sample_statistics(plan, s.x0, n, s.seed, opts.threads, indices, stats);

  VerifyReport r;
  r.scenario = s.name;
  r.check = "laplace";
  r.n_paths = n;
  r.dt = s.dt;
  r.seed = s.seed;
  r.pass = true;
  for (std::size_t q = 0; q < s.laplace_points.size(); ++q) {
    const auto& pt = s.laplace_points[q];
    VerifyEntry e;
    std::string lam = "(";
    for (Eigen::Index i = 0; i < pt.lam.size(); ++i) lam += (i ? "," : "") + fmt(pt.lam[i]);
    e.quantity = "L(t=" + fmt(pt.t) + ", lam=" + lam + "))";
    e.analytic = laplace_transform(s.params, der, s.x0, pt.lam, pt.t);
    e.estimate = m[q].mean[0];
    e.std_error = m[q].std_error()[0];
    e.bias_allowance = s.bias.laplace * s.dt + 1e-12 * (1.0 + std::abs(e.analytic));
    score(e, r.z_threshold);
    r.pass = r.pass && e.pass;
    r.entries.push_back(e);
  }
  r.runtime_seconds = seconds_since(t0);
  return r;
}

VerifyReport verify_comparison(const Scenario& s, const VerifyOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!s.comparison) throw InvalidConfig("scenario has no comparison section");
  const ComparisonSpec& cs = *s.comparison;
  const std::size_t n = opts.n_paths ? opts.n_paths : cs.n_paths;
  check_paths(n);
  const DerivedParams der = derive(s.params);
  const Vector beta_prime = s.params.beta + cs.beta_shift;
  const auto d = static_cast<Eigen::Index>(s.params.d);

  VerifyReport r;
  r.scenario = s.name;
  r.check = "comparison";
  r.n_paths = n;
  r.dt = cs.dt;
  r.seed = s.seed;
  r.pass = true;

  {
    const SimulationPlan fine(s.params, der, config_for(s.T, cs.dt / 2));
    check_budget(opts.budget, n, fine.steps(), 3);
  }

  for (const double dt : {cs.dt, cs.dt / 2}) {
    const SimulationPlan plan(s.params, der, config_for(s.T, dt));
    const std::size_t points = plan.steps() + 1;
    struct Chunk {
      Moments gap;
      std::uint64_t violations = 0;
      double worst = 0.0;
    };
    auto work = [&](std::size_t begin, std::size_t end) {
      Chunk c;
      c.gap = Moments(static_cast<Eigen::Index>(points) * d);
      Vector row(static_cast<Eigen::Index>(points) * d);
      for (std::size_t path = begin; path < end; ++path) {
        Rng rng = path_rng(s.seed, path);
        run_coupled(plan, beta_prime, s.x0, s.x0, rng,
                    [&](std::size_t k, const Vector& x, const Vector& y) {
                      for (Eigen::Index i = 0; i < d; ++i) {
                        const double g = y[i] - x[i];
                        row[static_cast<Eigen::Index>(k) * d + i] = g;
                        if (g < -1e-12) {
                          ++c.violations;
                          c.worst = std::max(c.worst, -g);
                        }
                      }
                    });
        c.gap.add(row);
      }
      return c;
    };
    const auto chunks = run_chunks<Chunk>(n, opts.threads, work);
    Moments gap(static_cast<Eigen::Index>(points) * d);
    ComparisonLevel level;
    level.dt = dt;
    level.triples = static_cast<std::uint64_t>(n) * points * static_cast<std::uint64_t>(d);
    for (const Chunk& c : chunks) {
      gap.merge(c.gap);
      level.violations += c.violations;
      level.worst_violation = std::max(level.worst_violation, c.worst);
    }
    level.violation_fraction =
        static_cast<double>(level.violations) / static_cast<double>(level.triples);
    r.levels.push_back(level);

    // Worst standardized shortfall of mean(X') below mean(X), per component.
    const Vector se = gap.std_error();
    for (Eigen::Index i = 0; i < d; ++i) {
      VerifyEntry e;
      double worst_score = -std::numeric_limits<double>::infinity();
      std::size_t worst_k = 0;
      for (std::size_t k = 0; k < points; ++k) {
        const Eigen::Index idx = static_cast<Eigen::Index>(k) * d + i;
        const double mu = gap.mean[idx];
        const double sd = se[idx];
        const double z = sd > 0.0 ? -mu / sd : (mu < -1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
        if (z > worst_score) {
          worst_score = z;
          worst_k = k;
        }
      }
      const Eigen::Index idx = static_cast<Eigen::Index>(worst_k) * d + i;
      e.quantity = component("mean(X'-X)", i) + " at t=" + fmt(plan.time(worst_k)) +
                   ", dt=" + fmt(dt);
      e.analytic = 0.0;
      e.estimate = gap.mean[idx];
      e.std_error = se[idx];
      e.raw_z = se[idx] > 0.0 ? gap.mean[idx] / se[idx] : 0.0;
      e.z = std::max(0.0, worst_score);
      e.pass = e.z <= r.z_threshold;
      r.pass = r.pass && e.pass;
      r.entries.push_back(e);
    }
  }
  r.pass = r.pass && r.levels[0].violation_fraction <= 0.01 &&
           r.levels[1].violation_fraction <= r.levels[0].violation_fraction;
  r.runtime_seconds = seconds_since(t0);
  return r;
}

}  // namespace cbi
