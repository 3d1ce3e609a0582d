#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "cbi/error.hpp"
#include "cbi/json_io.hpp"
#include "cbi/moments.hpp"
#include "cbi/montecarlo.hpp"
#include "cbi/params.hpp"
#include "cbi/riccati.hpp"
#include "cbi/scenario.hpp"
#include "cbi/simulate.hpp"

namespace cbi::cli {
namespace {

/// Raised for malformed command-line input; maps to kInputError.
struct UsageError : Error {
  using Error::Error;
};

/// Raised after an admissibility report has been printed.
struct Inadmissible : Error {
  using Error::Error;
};

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vector to_vector(const std::vector<double>& v, std::size_t d, const char* flag) {
  if (v.size() != d) {
    throw DimensionMismatch(std::string(flag) + " has " + std::to_string(v.size()) +
                            " entries, expected " + std::to_string(d));
  }
  Vector out(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

void require_nonnegative(const Vector& v, const char* flag) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      throw UsageError(std::string(flag) + " must be finite and nonnegative");
    }
  }
}

AdmissibleParams load_params(const std::filesystem::path& path) {
  if (path.empty()) throw UsageError("--params is required");
  const Json j = read_json_file(path);
  if (j.is_object() && j.contains("params")) return params_from_json(j.at("params"));
  return params_from_json(j);
}

ValidationReport dimension_failure(const std::string& message) {
  ValidationReport r;
  r.ok = false;
  Check c;
  c.name = "dimensions";
  c.passed = false;
  c.value = std::nan("");
  c.citation = "parameter shapes must agree with d";
  c.detail = message;
  r.checks.push_back(c);
  return r;
}

/// Loads and validates; prints the report and throws Inadmissible on failure.
AdmissibleParams admissible_params(const RunSpec& spec, std::ostream& err) {
  AdmissibleParams p = load_params(spec.params);
  const ValidationReport report = validate(p);
  if (!report.ok) {
    err << to_json(report).dump(2) << '\n';
    throw Inadmissible("parameters are not admissible");
  }
  return p;
}

void write_json(std::ostream& out, const Json& j) { out << j.dump(2) << '\n'; }

int cmd_validate(const RunSpec& spec, std::ostream& out) {
  const AdmissibleParams p = load_params(spec.params);
  ValidationReport report;
  try {
    report = validate(p);
  } catch (const DimensionMismatch& e) {
    write_json(out, to_json(dimension_failure(e.what())));
    return kInputError;
  }
  write_json(out, to_json(report));
  return report.ok ? kOk : kInadmissible;
}

int cmd_derive(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const AdmissibleParams p = admissible_params(spec, err);
  write_json(out, to_json(derive(p)));
  return kOk;
}

int cmd_laplace(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const AdmissibleParams p = admissible_params(spec, err);
  const Vector x = to_vector(spec.x, p.d, "--x");
  const Vector lam = to_vector(spec.lam, p.d, "--lam");
  require_nonnegative(x, "--x");
  require_nonnegative(lam, "--lam");
  if (!(spec.t >= 0.0)) throw UsageError("--t must be nonnegative");
  const double value = laplace_transform(p, derive(p), x, lam, spec.t);
  write_json(out, {{"x", to_json(x)}, {"lam", to_json(lam)}, {"t", spec.t}, {"value", value}});
  return kOk;
}

int cmd_mean(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const AdmissibleParams p = admissible_params(spec, err);
  const Vector m0 = to_vector(spec.m0, p.d, "--m0");
  require_nonnegative(m0, "--m0");
  if (!(spec.t >= 0.0)) throw UsageError("--t must be nonnegative");
  const Vector m = mean(p, derive(p), m0, spec.t);
  write_json(out, {{"m0", to_json(m0)}, {"t", spec.t}, {"value", to_json(m)}});
  return kOk;
}

PositivityMode parse_mode(const std::string& mode) {
  if (mode == "faithful") return PositivityMode::PaperFaithful;
  if (mode == "clamp") return PositivityMode::Clamp;
  throw UsageError("--mode must be 'faithful' or 'clamp'");
}

std::string indexed(const char* stem, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.csv", stem, k);
  return buf;
}

void write_path_csv(const std::filesystem::path& file, const Path& path, std::size_t d) {
  std::ofstream f(file);
  if (!f) throw UsageError("cannot write " + file.string());
  f << 't';
  for (std::size_t i = 1; i <= d; ++i) f << ",x" << i;
  f << '\n';
  for (std::size_t k = 0; k < path.grid.size(); ++k) {
    f << num(path.grid[k]);
    for (Eigen::Index i = 0; i < path.states[k].size(); ++i) f << ',' << num(path.states[k][i]);
    f << '\n';
  }
}

void write_jumps_csv(const std::filesystem::path& file, const Path& path, std::size_t d) {
  std::ofstream f(file);
  if (!f) throw UsageError("cannot write " + file.string());
  f << "t,kind,type";
  for (std::size_t i = 1; i <= d; ++i) f << ",z" << i;
  f << ",u\n";
  for (const JumpEvent& e : path.jumps) {
    const bool imm = e.kind == JumpKind::Immigration;
    f << num(e.time) << ',' << (imm ? "immigration" : "branching") << ',';
    if (!imm) f << e.type + 1;
    for (Eigen::Index i = 0; i < e.z.size(); ++i) f << ',' << num(e.z[i]);
    f << ',' << (imm ? std::string() : num(e.u)) << '\n';
  }
}

int cmd_simulate(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const AdmissibleParams p = admissible_params(spec, err);
  const Vector x0 = to_vector(spec.x0, p.d, "--x0");
  require_nonnegative(x0, "--x0");
  if (spec.out.empty()) throw UsageError("--out is required");
  if (spec.n == 0) throw UsageError("--n must be positive");
  SimConfig cfg;
  cfg.T = spec.T;
  cfg.dt = spec.dt;
  cfg.eps_trunc = spec.eps;
  cfg.positivity = parse_mode(spec.mode);
  cfg.record_jumps = spec.jumps;
  const SimulationPlan plan(p, derive(p), cfg);
  const std::vector<Path> paths = simulate_paths(plan, x0, spec.n, spec.seed, spec.threads);

  std::error_code ec;
  std::filesystem::create_directories(spec.out, ec);
  if (ec) throw UsageError("cannot create " + spec.out.string() + ": " + ec.message());
  Json files = Json::array();
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const std::string name = indexed("path", k);
    write_path_csv(spec.out / name, paths[k], p.d);
    files.push_back(name);
    if (spec.jumps) {
      const std::string jname = indexed("jumps", k);
      write_jumps_csv(spec.out / jname, paths[k], p.d);
      files.push_back(jname);
    }
  }
  write_json(out, {{"n_paths", spec.n},
                   {"steps", plan.steps()},
                   {"seed", spec.seed},
                   {"out", spec.out.string()},
                   {"files", files}});
  return kOk;
}

void print_table(std::ostream& out, const VerifyReport& r) {
  char line[256];
  std::snprintf(line, sizeof line, "scenario %s  check %s  n_paths %zu  dt %g  seed %llu\n",
                r.scenario.c_str(), r.check.c_str(), r.n_paths, r.dt,
                static_cast<unsigned long long>(r.seed));
  out << line;
  if (!r.entries.empty()) {
    std::snprintf(line, sizeof line, "%-22s %14s %14s %11s %11s %8s  %s\n", "quantity",
                  "analytic", "estimate", "std_error", "allowance", "z", "pass");
    out << line;
    for (const VerifyEntry& e : r.entries) {
      std::snprintf(line, sizeof line, "%-22s %14.8g %14.8g %11.4g %11.4g %8.3f  %s\n",
                    e.quantity.c_str(), e.analytic, e.estimate, e.std_error, e.bias_allowance,
                    e.z, e.pass ? "yes" : "no");
      out << line;
    }
  }
  if (!r.levels.empty()) {
    std::snprintf(line, sizeof line, "%-12s %12s %12s %12s %14s\n", "dt", "triples",
                  "violations", "fraction", "worst");
    out << line;
    for (const ComparisonLevel& l : r.levels) {
      std::snprintf(line, sizeof line, "%-12g %12llu %12llu %12.4g %14.6g\n", l.dt,
                    static_cast<unsigned long long>(l.triples),
                    static_cast<unsigned long long>(l.violations), l.violation_fraction,
                    l.worst_violation);
      out << line;
    }
  }
  out << "result: " << (r.pass ? "PASS" : "FAIL") << '\n';
}

int cmd_verify(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.scenario.empty()) throw UsageError("--scenario is required");
  const Scenario s = load_scenario(spec.scenario, spec.scenario_dir);
  const ValidationReport report = validate(s.params);
  if (!report.ok) {
    err << to_json(report).dump(2) << '\n';
    throw Inadmissible("scenario parameters are not admissible");
  }
  VerifyOptions opts;
  opts.threads = spec.threads;
  opts.n_paths = spec.paths;
  VerifyReport r;
  if (spec.check == "mean") {
    r = verify_mean(s, opts);
  } else if (spec.check == "laplace") {
    r = verify_laplace(s, opts);
  } else if (spec.check == "comparison") {
    r = verify_comparison(s, opts);
  } else {
    throw UsageError("verify expects mean, laplace or comparison");
  }
  print_table(out, r);
  if (!spec.out.empty()) {
    std::ofstream f(spec.out);
    if (!f) throw UsageError("cannot write " + spec.out.string());
    f << to_json(r, spec.with_timing).dump(2) << '\n';
  }
  return r.pass ? kOk : kVerifyFailed;
}

int dispatch(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.command == "validate") return cmd_validate(spec, out);
  if (spec.command == "derive") return cmd_derive(spec, out, err);
  if (spec.command == "laplace") return cmd_laplace(spec, out, err);
  if (spec.command == "mean") return cmd_mean(spec, out, err);
  if (spec.command == "simulate") return cmd_simulate(spec, out, err);
  if (spec.command == "verify") return cmd_verify(spec, out, err);
  throw UsageError("unknown command '" + spec.command + "'");
}

}  // namespace

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(spec, out, err);
  } catch (const Inadmissible& e) {
    err << "error: " << e.what() << '\n';
    return kInadmissible;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kInputError;
  } catch (const DimensionMismatch& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return kInputError;
  } catch (const InvalidConfig& e) {
    err << "invalid configuration: " << e.what() << '\n';
    return kInputError;
  } catch (const PreconditionViolated& e) {
    err << "precondition violated: " << e.what() << '\n';
    return kInputError;
  } catch (const Json::exception& e) {
    err << "schema error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericFailure;
  }
}

}  // namespace cbi::cli
