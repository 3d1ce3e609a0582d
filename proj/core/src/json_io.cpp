#include "cbi/json_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "cbi/error.hpp"

namespace cbi {
namespace {

[[noreturn]] void schema(const std::string& msg) { throw SchemaError(msg); }

const Json& field(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    schema(std::string(what) + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

double number(const Json& j, const char* what) {
  if (!j.is_number()) schema(std::string(what) + ": expected a number");
  return j.get<double>();
}

std::size_t count(const Json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    schema(std::string(what) + ": expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

// Infinite values serialize as null, which nlohmann would otherwise emit for them silently.
Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_inf(const Json& j, const char* what) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return number(j, what);
}

MeasureFamily family_from_json(const Json& j, std::size_t dim, const std::string& what) {
  const char* w = what.c_str();
  const Json& tag = field(j, "family", w);
  if (!tag.is_string()) schema(what + ": \"family\" must be a string");
  const std::string f = tag.get<std::string>();
  if (f == "discrete") {
    DiscreteAtoms out;
    const Json& atoms = field(j, "atoms", w);
    if (!atoms.is_array()) schema(what + ": \"atoms\" must be an array");
    for (const Json& a : atoms) {
      out.atoms.push_back(Atom{vector_from_json(field(a, "z", w), w), number(field(a, "w", w), w)});
    }
    return out;
  }
  if (f == "product_exponential") {
    return ProductExponential{number(field(j, "total_mass", w), w),
                              vector_from_json(field(j, "rates", w), w)};
  }
  if (f == "tempered_power_law") {
    const std::size_t axis = count(field(j, "axis", w), w);
    if (axis == 0) schema(what + ": \"axis\" is 1-based");
    TemperedPowerLawAxis t;
    t.axis = axis - 1;
    t.alpha = number(field(j, "alpha", w), w);
    t.tempering = number(field(j, "tempering", w), w);
    t.scale = number(field(j, "scale", w), w);
    (void)dim;
    return t;
  }
  schema(what + ": unknown family \"" + f + "\"");
}

Json family_to_json(const MeasureFamily& f) {
  if (const auto* a = std::get_if<DiscreteAtoms>(&f)) {
    Json atoms = Json::array();
    for (const Atom& at : a->atoms) atoms.push_back({{"z", to_json(at.z)}, {"w", at.w}});
    return {{"family", "discrete"}, {"atoms", atoms}};
  }
  if (const auto* p = std::get_if<ProductExponential>(&f)) {
    return {{"family", "product_exponential"},
            {"total_mass", p->total_mass},
            {"rates", to_json(p->rates)}};
  }
  const auto& t = std::get<TemperedPowerLawAxis>(f);
  return {{"family", "tempered_power_law"},
          {"axis", t.axis + 1},
          {"alpha", t.alpha},
          {"tempering", t.tempering},
          {"scale", t.scale}};
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) schema("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    schema(path.string() + ": " + e.what());
  }
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number_or_null(m(i, k)));
    out.push_back(row);
  }
  return out;
}

Vector vector_from_json(const Json& j, const char* what) {
  if (!j.is_array()) schema(std::string(what) + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number_or_inf(j[i], what);
  }
  return v;
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) schema(std::string(what) + ": expected an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? (j[0].is_array() ? j[0].size() : 0) : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[r], what);
    if (static_cast<std::size_t>(row.size()) != cols) {
      throw DimensionMismatch(std::string(what) + ": rows have different lengths");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

JumpMeasure measure_from_json(const Json& j, std::size_t dim, const char* what) {
  std::vector<MeasureFamily> parts;
  if (j.is_null()) return JumpMeasure(dim);
  if (j.is_object()) {
    parts.push_back(family_from_json(j, dim, what));
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      parts.push_back(family_from_json(j[k], dim, std::string(what) + "[" + std::to_string(k) + "]"));
    }
  } else {
    schema(std::string(what) + ": a measure is null, an object or an array");
  }
  return JumpMeasure(dim, std::move(parts));
}

Json to_json(const JumpMeasure& m) {
  Json out = Json::array();
  for (const auto& c : m.components()) out.push_back(family_to_json(c.family()));
  return out;
}

AdmissibleParams params_from_json(const Json& j) {
  if (!j.is_object()) schema("parameters must be a JSON object");
  AdmissibleParams p;
  p.d = count(field(j, "d", "params"), "params.d");
  if (p.d == 0) schema("params.d must be positive");
  p.c = vector_from_json(field(j, "c", "params"), "params.c");
  p.beta = vector_from_json(field(j, "beta", "params"), "params.beta");
  p.B = matrix_from_json(field(j, "B", "params"), "params.B");
  p.nu = measure_from_json(j.contains("nu") ? j.at("nu") : Json(), p.d, "params.nu");
  const Json& mu = field(j, "mu", "params");
  if (!mu.is_array()) schema("params.mu must be an array with one measure per type");
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::string w = "params.mu[" + std::to_string(i + 1) + "]";
    p.mu.push_back(measure_from_json(mu[i], p.d, w.c_str()));
  }
  return p;
}

Json to_json(const AdmissibleParams& p) {
  Json mu = Json::array();
  for (const auto& m : p.mu) mu.push_back(to_json(m));
  return {{"d", p.d},   {"c", to_json(p.c)},   {"beta", to_json(p.beta)},
          {"B", to_json(p.B)}, {"nu", to_json(p.nu)}, {"mu", mu}};
}

Json to_json(const DerivedParams& der) {
  return {{"beta_tilde", to_json(der.beta_tilde)},
          {"B_tilde", to_json(der.B_tilde)},
          {"D", to_json(der.D)},
          {"B_hat", to_json(der.B_hat)},
          {"large_jump_mean", to_json(der.large_jump_mean)},
          {"rates",
           {{"nu_total", number_or_null(der.rates.nu_total)},
            {"nu_large", number_or_null(der.rates.nu_large)},
            {"mu_total", to_json(der.rates.mu_total)},
            {"mu_large", to_json(der.rates.mu_large)}}}};
}

DerivedParams derived_from_json(const Json& j) {
  DerivedParams der;
  der.beta_tilde = vector_from_json(field(j, "beta_tilde", "derived"), "beta_tilde");
  der.B_tilde = matrix_from_json(field(j, "B_tilde", "derived"), "B_tilde");
  der.D = matrix_from_json(field(j, "D", "derived"), "D");
  der.B_hat = matrix_from_json(field(j, "B_hat", "derived"), "B_hat");
  der.large_jump_mean = matrix_from_json(field(j, "large_jump_mean", "derived"), "large_jump_mean");
  const Json& r = field(j, "rates", "derived");
  der.rates.nu_total = number_or_inf(field(r, "nu_total", "rates"), "nu_total");
  der.rates.nu_large = number_or_inf(field(r, "nu_large", "rates"), "nu_large");
  der.rates.mu_total = vector_from_json(field(r, "mu_total", "rates"), "mu_total");
  der.rates.mu_large = vector_from_json(field(r, "mu_large", "rates"), "mu_large");
  return der;
}

Json to_json(const ValidationReport& r) {
  Json checks = Json::array();
  for (const Check& c : r.checks) {
    Json o = {{"name", c.name},
              {"passed", c.passed},
              {"value", number_or_null(c.value)},
              {"divergent", c.divergent},
              {"citation", c.citation}};
    if (!c.detail.empty()) o["detail"] = c.detail;
    checks.push_back(o);
  }
  return {{"ok", r.ok}, {"checks", checks}};
}

Json to_json(const McEstimate& e) {
  return {{"value", to_json(e.value)},
          {"std_error", to_json(e.std_error)},
          {"n_paths", e.n_paths},
          {"dt", e.dt},
          {"seed", e.seed}};
}

Json to_json(const VerifyReport& r, bool with_timing) {
  Json entries = Json::array();
  for (const VerifyEntry& e : r.entries) {
    entries.push_back({{"quantity", e.quantity},
                       {"analytic", number_or_null(e.analytic)},
                       {"estimate", number_or_null(e.estimate)},
                       {"std_error", number_or_null(e.std_error)},
                       {"raw_z", number_or_null(e.raw_z)},
                       {"z", number_or_null(e.z)},
                       {"bias_allowance", number_or_null(e.bias_allowance)},
                       {"pass", e.pass}});
  }
  Json out = {{"scenario", r.scenario},
              {"check", r.check},
              {"n_paths", r.n_paths},
              {"dt", r.dt},
              {"seed", r.seed},
              {"z_threshold", r.z_threshold},
              {"entries", entries},
              {"pass", r.pass}};
  if (!r.levels.empty()) {
    Json levels = Json::array();
    for (const ComparisonLevel& l : r.levels) {
      levels.push_back({{"dt", l.dt},
                        {"triples", l.triples},
                        {"violations", l.violations},
                        {"violation_fraction", l.violation_fraction},
                        {"worst_violation", l.worst_violation}});
    }
    out["levels"] = levels;
  }
  if (with_timing) out["runtime_seconds"] = r.runtime_seconds;
  return out;
}

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) schema("scenario must be a JSON object");
  Scenario s;
  const Json& name = field(j, "name", "scenario");
  if (!name.is_string()) schema("scenario.name must be a string");
  s.name = name.get<std::string>();
  if (j.contains("description") && j.at("description").is_string()) {
    s.description = j.at("description").get<std::string>();
  }
  s.params = params_from_json(field(j, "params", "scenario"));
  s.x0 = vector_from_json(field(j, "x0", "scenario"), "scenario.x0");
  s.T = number(field(j, "T", "scenario"), "scenario.T");
  s.dt = number(field(j, "dt", "scenario"), "scenario.dt");
  s.n_paths = count(field(j, "n_paths", "scenario"), "scenario.n_paths");
  const Json& seed = field(j, "seed", "scenario");
  if (!seed.is_number_unsigned()) schema("scenario.seed must be an unsigned integer");
  s.seed = seed.get<std::uint64_t>();
  if (j.contains("laplace_points")) {
    for (const Json& pt : j.at("laplace_points")) {
      s.laplace_points.push_back(LaplacePoint{number(field(pt, "t", "laplace point"), "t"),
                                              vector_from_json(field(pt, "lam", "laplace point"),
                                                               "lam")});
    }
  }
  if (j.contains("bias")) {
    const Json& b = j.at("bias");
    if (b.contains("mean")) s.bias.mean = number(b.at("mean"), "bias.mean");
    if (b.contains("laplace")) s.bias.laplace = number(b.at("laplace"), "bias.laplace");
  }
  if (j.contains("comparison")) {
    const Json& c = j.at("comparison");
    ComparisonSpec cs;
    cs.beta_shift = vector_from_json(field(c, "beta_shift", "comparison"), "beta_shift");
    cs.n_paths = count(field(c, "n_paths", "comparison"), "comparison.n_paths");
    cs.dt = number(field(c, "dt", "comparison"), "comparison.dt");
    s.comparison = cs;
  }
  return s;
}

}  // namespace cbi
