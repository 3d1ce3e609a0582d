// Estimates the discretisation bias constants C (bias ~ C dt) of the bundled
// scenarios and optionally writes them back into the scenario files.
//
// usage: cbi_calibrate_bias [--write] [--paths N] [--coarse H] NAME...
//
// Mean: the scheme's mean follows m <- m + dt (beta~ + B~ m) exactly while the
// state stays nonnegative, so the deterministic recursion gives the leading
// rate directly. Both quantities also get a Monte Carlo halving estimate
// 2 (E_h - E_{h/2}) / h at a coarse step h, where the bias dominates the noise.
// C is twice the larger of the two upper estimates.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "cbi/json_io.hpp"
#include "cbi/moments.hpp"
#include "cbi/montecarlo.hpp"
#include "cbi/riccati.hpp"
#include "cbi/scenario.hpp"

#ifndef CBI_DEFAULT_SCENARIO_DIR
#define CBI_DEFAULT_SCENARIO_DIR "scenarios"
#endif

namespace {

using cbi::Vector;

struct Rate {
  double value = 0.0;
  double noise = 0.0;
  double upper() const { return std::abs(value) + 2.0 * noise; }
};

double euler_mean_rate(const cbi::Scenario& s, const cbi::DerivedParams& der) {
  const cbi::SimulationPlan plan(s.params, der, {s.T, s.dt});
  Vector m = s.x0;
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    const double h = plan.time(k + 1) - plan.time(k);
    m += h * (der.beta_tilde + der.B_tilde * m);
  }
  const Vector exact = cbi::mean(s.params, der, s.x0, s.T);
  return (m - exact).cwiseAbs().maxCoeff() / s.dt;
}

Rate halving(const cbi::McEstimate& coarse, const cbi::McEstimate& fine, Eigen::Index i,
             double h) {
  const double diff = coarse.value[i] - fine.value[i];
  const double se = std::hypot(coarse.std_error[i], fine.std_error[i]);
  return {2.0 * diff / h, 2.0 * se / h};
}

cbi::SimConfig config(double T, double h) {
  cbi::SimConfig cfg;
  cfg.T = T;
  cfg.dt = h;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  bool write = false;
  std::size_t n_paths = 1'000'000;
  double h = 1.0 / 32.0;
  std::vector<std::string> names;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--write") {
      write = true;
    } else if (arg == "--paths" && a + 1 < argc) {
      n_paths = std::strtoull(argv[++a], nullptr, 10);
    } else if (arg == "--coarse" && a + 1 < argc) {
      h = std::strtod(argv[++a], nullptr);
    } else {
      names.push_back(arg);
    }
  }
  if (names.empty()) {
    std::fprintf(stderr, "usage: cbi_calibrate_bias [--write] [--paths N] [--coarse H] NAME...\n");
    return 2;
  }
  const auto dir = cbi::scenario_dir(CBI_DEFAULT_SCENARIO_DIR);

  for (const std::string& name : names) {
    const cbi::Scenario s = cbi::load_scenario(name, dir);
    const cbi::DerivedParams der = cbi::derive(s.params);

    const double det = euler_mean_rate(s, der);
    const auto mc = cbi::estimate_mean(s.params, der, s.x0, s.T, n_paths, config(s.T, h),
                                       s.seed + 1);
    const auto mf = cbi::estimate_mean(s.params, der, s.x0, s.T, n_paths,
                                       config(s.T, h / 2.0), s.seed + 2);
    double mean_upper = det;
    for (Eigen::Index i = 0; i < s.x0.size(); ++i) {
      const Rate r = halving(mc, mf, i, h);
      std::printf("%s mean[%td]: halving rate %.4g +- %.2g\n", s.name.c_str(), i + 1, r.value,
                  r.noise);
      mean_upper = std::max(mean_upper, r.upper());
    }
    std::printf("%s mean: deterministic rate %.4g\n", s.name.c_str(), det);

    double lap_upper = 0.0;
    for (const cbi::LaplacePoint& pt : s.laplace_points) {
      const auto lc = cbi::estimate_laplace(s.params, der, s.x0, pt.lam, pt.t, n_paths,
                                            config(pt.t, h), s.seed + 3);
      const auto lf = cbi::estimate_laplace(s.params, der, s.x0, pt.lam, pt.t, n_paths,
                                            config(pt.t, h / 2.0), s.seed + 4);
      const Rate r = halving(lc, lf, 0, h);
      const double exact = cbi::laplace_transform(s.params, der, s.x0, pt.lam, pt.t);
      std::printf("%s laplace t=%g: halving rate %.4g +- %.2g (coarse error rate %.4g)\n",
                  s.name.c_str(), pt.t, r.value, r.noise, (lc.value[0] - exact) / h);
      lap_upper = std::max(lap_upper, r.upper());
    }

    const double c_mean = 2.0 * mean_upper;
    const double c_lap = 2.0 * lap_upper;
    std::printf("%s: C_mean = %.4g, C_laplace = %.4g\n", s.name.c_str(), c_mean, c_lap);

    if (write) {
      const auto file = std::filesystem::exists(name) ? std::filesystem::path(name)
                                                      : dir / (name + ".json");
      cbi::Json j = cbi::read_json_file(file);
      j["bias"] = {{"mean", c_mean}, {"laplace", c_lap}};
      std::ofstream(file) << j.dump(2) << '\n';
    }
  }
  return 0;
}
