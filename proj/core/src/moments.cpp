#include "cbi/moments.hpp"

#include <array>
#include <cmath>
#include <string>

#include "cbi/error.hpp"

namespace cbi {
namespace {

double one_norm(const Matrix& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); }

// Higham's theta_m bounds for m = 3, 5, 7, 9, 13.
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1,
                                          9.504178996162932e-1, 2.097847961257068e0,
                                          5.371920351148152e0};

Matrix pade_low(const Matrix& A, int m) {
  static constexpr double b3[] = {120, 60, 12, 1};
  static constexpr double b5[] = {30240, 15120, 3360, 420, 30, 1};
  static constexpr double b7[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
  static constexpr double b9[] = {17643225600, 8821612800, 2075673600, 302702400, 30270240,
                                  2162160,     110880,     3960,       90,        1};
  const double* b = m == 3 ? b3 : m == 5 ? b5 : m == 7 ? b7 : b9;
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  Matrix power = I;
  Matrix U = b[1] * I;
  Matrix V = b[0] * I;
  for (int k = 1; 2 * k <= m; ++k) {
    power = power * A2;
    U += b[2 * k + 1] * power;
    V += b[2 * k] * power;
  }
  U = A * U;
  return (V - U).partialPivLu().solve(V + U);
}

Matrix pade13(const Matrix& A) {
  static constexpr double b[] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                        b[3] * A2 + b[1] * I);
  const Matrix V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  return (V - U).partialPivLu().solve(V + U);
}

}  // namespace

Matrix expm(const Matrix& A) {
  if (A.rows() != A.cols()) throw DimensionMismatch("expm needs a square matrix");
  if (!A.allFinite()) throw Overflow("expm argument has non-finite entries");
  if (A.size() == 0) return A;
  const double norm = one_norm(A);
  constexpr std::array<int, 4> kLow = {3, 5, 7, 9};
  for (std::size_t k = 0; k < kLow.size(); ++k) {
    if (norm <= kTheta[k]) return pade_low(A, kLow[k]);
  }
  int s = 0;
  if (norm > kTheta[4]) s = static_cast<int>(std::ceil(std::log2(norm / kTheta[4])));
  if (s > 1000) throw Overflow("expm argument norm too large");
  Matrix X = pade13(A / std::ldexp(1.0, s));
  for (int k = 0; k < s; ++k) X = X * X;
  if (!X.allFinite()) throw Overflow("matrix exponential overflowed");
  return X;
}

Vector expm_action(const Matrix& A, double t, const Vector& v) {
  if (A.cols() != v.size()) throw DimensionMismatch("expm_action: size mismatch");
  return expm(t * A) * v;
}

Matrix integrated_expm(const Matrix& A, double t) {
  if (A.rows() != A.cols()) throw DimensionMismatch("integrated_expm needs a square matrix");
  const auto n = A.rows();
  Matrix M = Matrix::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = t * A;
  M.topRightCorner(n, n) = t * Matrix::Identity(n, n);
  return expm(M).topRightCorner(n, n);
}

Vector mean(const AdmissibleParams& p, const DerivedParams& der, const Vector& m0, double t) {
  if (static_cast<std::size_t>(m0.size()) != p.d) {
    throw DimensionMismatch("m0 has size " + std::to_string(m0.size()) + ", expected " +
                            std::to_string(p.d));
  }
  if (!(t >= 0.0)) throw InvalidConfig("t must be >= 0");
  if (t == 0.0) return m0;
  const auto n = static_cast<Eigen::Index>(p.d);
  Matrix M = Matrix::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = t * der.B_tilde;
  M.topRightCorner(n, n) = t * Matrix::Identity(n, n);
  const Matrix E = expm(M);
  return E.topLeftCorner(n, n) * m0 + E.topRightCorner(n, n) * der.beta_tilde;
}

}  // namespace cbi
