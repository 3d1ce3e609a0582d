#pragma once

#include "cbi/params.hpp"
#include "cbi/types.hpp"

namespace cbi {

/// e^{A} by Pade scaling and squaring.
Matrix expm(const Matrix& A);

/// e^{tA} v.
Vector expm_action(const Matrix& A, double t, const Vector& v);

/// int_0^t e^{uA} du, the top-right block of exp(t [[A, I], [0, 0]]).
Matrix integrated_expm(const Matrix& A, double t);

/// E X_t = e^{t B_tilde} m0 + (int_0^t e^{u B_tilde} du) beta_tilde.
Vector mean(const AdmissibleParams& p, const DerivedParams& der, const Vector& m0, double t);

}  // namespace cbi
