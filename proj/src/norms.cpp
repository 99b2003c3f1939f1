#include "dsgd/norms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dsgd/svd.hpp"

namespace dsgd {

std::string_view to_string(NormTag q) { return q == NormTag::Q2 ? "2" : "inf"; }

NormTag parse_norm_tag(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "2" || lower == "q2") return NormTag::Q2;
  if (lower == "inf" || lower == "qinf" || lower == "infinity") return NormTag::QInf;
  throw std::invalid_argument("unknown norm tag '" + lower + "' (expected 2 or inf)");
}

double operator_norm(const DenseMatrix& a, NormTag q) {
  if (q == NormTag::Q2) {
    if (a.is_zero()) return 0.0;
    return svd(a).singular_values.front();
  }
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += std::abs(x);
    best = std::max(best, s);
  }
  return best;
}

double dual_norm(const DenseMatrix& ell, NormTag q) {
  if (q == NormTag::Q2) {
    if (ell.is_zero()) return 0.0;
    const auto sv = svd(ell).singular_values;
    return std::accumulate(sv.begin(), sv.end(), 0.0);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ell.rows(); ++i) {
    double m = 0.0;
    for (double x : ell.row(i)) m = std::max(m, std::abs(x));
    total += m;
  }
  return total;
}

DenseMatrix duality_map(const DenseMatrix& ell, NormTag q) {
  DenseMatrix rho(ell.rows(), ell.cols());
  if (ell.is_zero()) return rho;

  if (q == NormTag::Q2) {
    const SingularDecomposition d = svd(ell);
    const double scale =
        std::accumulate(d.singular_values.begin(), d.singular_values.end(), 0.0);
    const std::size_t rank = d.rank();
    for (std::size_t k = 0; k < rank; ++k)
      for (std::size_t i = 0; i < ell.rows(); ++i)
        for (std::size_t j = 0; j < ell.cols(); ++j) rho(i, j) += d.u(i, k) * d.v(j, k);
    rho *= scale;
    return rho;
  }

  const double scale = dual_norm(ell, q);
  for (std::size_t i = 0; i < ell.rows(); ++i) {
    const auto r = ell.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < r.size(); ++j)
      if (std::abs(r[j]) > std::abs(r[arg])) arg = j;
    rho(i, arg) = r[arg] < 0.0 ? -scale : scale;
  }
  return rho;
}

}  // namespace dsgd
