#ifndef DSGD_SVD_HPP
#define DSGD_SVD_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dsgd/matrix.hpp"

namespace dsgd {

/// Thin singular value decomposition a = u * diag(singular_values) * v^T.
/// u is rows x r and v is cols x r with r = min(rows, cols); both have
/// orthonormal columns. Singular values are sorted descending.
struct SingularDecomposition {
  DenseMatrix u;
  std::vector<double> singular_values;
  DenseMatrix v;
  /// Values strictly above this count toward the numerical rank.
  double rank_tol = 0.0;

  std::size_t rank() const;
  DenseMatrix reconstruct() const;
};

class SvdNotConverged : public std::runtime_error {
 public:
  SvdNotConverged(int sweeps, double residual);
  int sweeps() const { return sweeps_; }
  /// Largest normalized column coupling |<a_p, a_q>| / (|a_p| |a_q|) left.
  double residual() const { return residual_; }

 private:
  int sweeps_;
  double residual_;
};

inline constexpr int kJacobiMaxSweeps = 100;

/// One-sided (Hestenes) Jacobi SVD. Throws SvdNotConverged when the sweep
/// cap is reached.
SingularDecomposition svd(const DenseMatrix& a, int max_sweeps = kJacobiMaxSweeps);

}  // namespace dsgd

#endif  // DSGD_SVD_HPP
