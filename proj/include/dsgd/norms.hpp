#ifndef DSGD_NORMS_HPP
#define DSGD_NORMS_HPP

#include <string_view>

#include "dsgd/matrix.hpp"

namespace dsgd {

/// Which vector norm the layer spaces carry; matrices get the induced
/// operator norm.
enum class NormTag { Q2, QInf };

std::string_view to_string(NormTag q);
/// Accepts "2", "q2", "inf", "qinf" (case-insensitive).
NormTag parse_norm_tag(std::string_view s);

/// Induced operator norm: spectral norm for Q2, max absolute row sum for QInf.
double operator_norm(const DenseMatrix& a, NormTag q);

/// Norm of `ell` as a linear functional on matrices under the Frobenius
/// pairing. Trace norm for Q2, sum of per-row max |ell_ij| for QInf.
double dual_norm(const DenseMatrix& ell, NormTag q);

/// A duality map for the operator norm: returns rho with
/// operator_norm(rho) == dual_norm(ell) and <ell, rho> == dual_norm(ell)^2.
///
/// Q2 replaces every singular value above the numerical rank tolerance by
/// one and scales by the trace norm. QInf keeps sgn(ell_ij) at the first
/// per-row argmax of |ell_ij| (sgn(0) = +1) and scales by the dual norm.
DenseMatrix duality_map(const DenseMatrix& ell, NormTag q);

}  // namespace dsgd

#endif  // DSGD_NORMS_HPP
