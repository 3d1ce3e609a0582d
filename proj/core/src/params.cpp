#include "cbi/params.hpp"

#include <cmath>
#include <string>

#include "cbi/error.hpp"

namespace cbi {
namespace {

std::string idx(std::size_t i) { return "[" + std::to_string(i + 1) + "]"; }

Check integrability(std::string name, double value, std::string citation) {
  Check c;
  c.name = std::move(name);
  c.divergent = std::isinf(value);
  c.value = value;
  c.passed = std::isfinite(value);
  c.citation = std::move(citation);
  if (std::isnan(value)) c.detail = "integral could not be evaluated";
  if (c.divergent) c.detail = "integral diverges";
  return c;
}

Check evaluate(std::string name, std::string citation, const std::function<double()>& f) {
  try {
    return integrability(std::move(name), f(), std::move(citation));
  } catch (const QuadratureFailure& e) {
    Check c = integrability(std::move(name), std::nan(""), std::move(citation));
    c.detail = e.what();
    return c;
  }
}

}  // namespace

const Check* ValidationReport::find(const std::string& name) const {
  for (const Check& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void check_dimensions(const AdmissibleParams& p) {
  const auto d = static_cast<Eigen::Index>(p.d);
  auto fail = [](const std::string& what, Eigen::Index got, Eigen::Index want) {
    throw DimensionMismatch(what + " has size " + std::to_string(got) + ", expected " +
                            std::to_string(want));
  };
  if (p.d == 0) throw DimensionMismatch("d must be positive");
  if (p.c.size() != d) fail("c", p.c.size(), d);
  if (p.beta.size() != d) fail("beta", p.beta.size(), d);
  if (p.B.rows() != d) fail("B (rows)", p.B.rows(), d);
  if (p.B.cols() != d) fail("B (columns)", p.B.cols(), d);
  if (p.nu.dim() != p.d) fail("nu", static_cast<Eigen::Index>(p.nu.dim()), d);
  if (p.mu.size() != p.d) fail("mu", static_cast<Eigen::Index>(p.mu.size()), d);
  for (std::size_t i = 0; i < p.d; ++i) {
    if (p.mu[i].dim() != p.d) fail("mu" + idx(i), static_cast<Eigen::Index>(p.mu[i].dim()), d);
  }
}

ValidationReport validate(const AdmissibleParams& p) {
  check_dimensions(p);
  ValidationReport r;
  const std::size_t d = p.d;

  {
    Check c{"B.essentially_nonnegative", true, 0.0, false,
            "b_ij >= 0 for i != j", ""};
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double b = p.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!std::isfinite(b)) {
          c.passed = false;
          c.detail = "B" + idx(i) + idx(j) + " is not finite";
        } else if (i != j && b < worst) {
          worst = b;
          c.passed = false;
          c.detail = "B" + idx(i) + idx(j) + " = " + std::to_string(b) + " < 0";
        }
      }
    }
    c.value = worst;
    r.checks.push_back(c);
  }
  auto nonneg = [&](const std::string& name, const Vector& v, const char* cite) {
    Check c{name, true, 0.0, false, cite, ""};
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
        c.passed = false;
        c.value = v[i];
        c.detail = name.substr(0, name.find('.')) + idx(static_cast<std::size_t>(i)) +
                   " must be finite and >= 0";
        break;
      }
    }
    r.checks.push_back(c);
  };
  nonneg("c.nonnegative", p.c, "c in R_+^d");
  nonneg("beta.nonnegative", p.beta, "beta in R_+^d");

  r.checks.push_back(evaluate("nu.one_wedge_norm", "int (1 ^ |z|) nu(dz) < inf",
                              [&] { return moment_integral(p.nu, MomentKind::OneWedgeNorm, 0); }));
  r.checks.push_back(evaluate("nu.large_jump_first_moment", "int |z| 1{|z| >= 1} nu(dz) < inf",
                              [&] { return moment_integral(p.nu, MomentKind::NormLarge, 0); }));
  for (std::size_t i = 0; i < d; ++i) {
    const JumpMeasure& m = p.mu[i];
    const std::string pre = "mu" + idx(i);
    r.checks.push_back(evaluate(pre + ".small_jump_second_moment",
                                "int |z|^2 1{|z| < 1} mu_i(dz) < inf",
                                [&] { return moment_integral(m, MomentKind::NormSqSmall, i); }));
    r.checks.push_back(evaluate(pre + ".large_jump_first_moment",
                                "int |z| 1{|z| >= 1} mu_i(dz) < inf",
                                [&] { return moment_integral(m, MomentKind::NormLarge, i); }));
    for (std::size_t j = 0; j < d; ++j) {
      if (j == i) continue;
      r.checks.push_back(evaluate(pre + ".off_type_first_moment" + idx(j),
                                  "int z_j mu_i(dz) < inf for j != i",
                                  [&] { return moment_integral(m, MomentKind::Coord, j); }));
    }
  }
  for (const Check& c : r.checks) r.ok = r.ok && c.passed;
  return r;
}

DerivedParams derive(const AdmissibleParams& p) {
  check_dimensions(p);
  const std::size_t d = p.d;
  const auto n = static_cast<Eigen::Index>(d);
  DerivedParams out;
  out.beta_tilde = p.beta;
  out.B_tilde = p.B;
  out.D = Matrix::Zero(n, n);
  out.B_hat = p.B;
  out.large_jump_mean = Matrix::Zero(n, n);
  out.rates.nu_total = total_mass(p.nu, Region::all());
  out.rates.nu_large = total_mass(p.nu, Region::large());
  out.rates.mu_total = Vector::Zero(n);
  out.rates.mu_large = Vector::Zero(n);

  for (std::size_t i = 0; i < d; ++i) {
    out.beta_tilde[static_cast<Eigen::Index>(i)] += moment_integral(p.nu, MomentKind::Coord, i);
  }
  for (std::size_t j = 0; j < d; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const JumpMeasure& m = p.mu[j];
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      out.B_tilde(ii, jj) += moment_integral(m, MomentKind::CoordMinusDeltaPlus, i, j);
      out.large_jump_mean(ii, jj) = moment_integral(m, MomentKind::CoordLarge, i);
      out.D(ii, jj) = out.B_tilde(ii, jj) - out.large_jump_mean(ii, jj);
    }
    out.B_hat(jj, jj) -= moment_integral(m, MomentKind::OneWedgeCoord, j);
    out.rates.mu_total[jj] = total_mass(m, Region::all());
    out.rates.mu_large[jj] = total_mass(m, Region::large());
  }
  return out;
}

}  // namespace cbi
