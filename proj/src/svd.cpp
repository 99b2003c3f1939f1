#include "dsgd/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dsgd {

namespace {

constexpr double kRotationTol = 1e-15;

// Columns of `m` are stored as contiguous vectors for the rotation sweeps.
using Columns = std::vector<std::vector<double>>;

Columns to_columns(const DenseMatrix& a) {
  Columns c(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c[j][i] = a(i, j);
  return c;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

void rotate(std::vector<double>& x, std::vector<double>& y, double c, double s) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double yk = y[k];
    x[k] = c * xk - s * yk;
    y[k] = s * xk + c * yk;
  }
}

// Replaces basis[j] by a unit vector orthogonal to basis[0..j).
void complete_basis(Columns& basis, std::size_t j) {
  const std::size_t n = basis[j].size();
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<double> cand(n, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        const double proj = dot(cand, basis[k]);
        for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * basis[k][i];
      }
    }
    const double norm = std::sqrt(dot(cand, cand));
    if (norm > 0.5) {
      for (double& x : cand) x /= norm;
      basis[j] = std::move(cand);
      return;
    }
  }
}

SingularDecomposition jacobi_tall(const DenseMatrix& a, int max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Columns u = to_columns(a);
  Columns v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  bool converged = n < 2;
  double residual = 0.0;
  int sweep = 0;
  for (; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    residual = 0.0;
    // Columns below rounding level of the largest cannot be orthogonalized
    // further and sit under the rank tolerance anyway.
    double top = 0.0;
    for (const auto& col : u) top = std::max(top, dot(col, col));
    const double floor = top * 1e-32;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(u[p], u[p]);
        const double beta = dot(u[q], u[q]);
        const double gamma = dot(u[p], u[q]);
        const double norms = std::sqrt(alpha) * std::sqrt(beta);
        if (gamma == 0.0 || alpha <= floor || beta <= floor) continue;
        const double coupling = std::abs(gamma) / norms;
        residual = std::max(residual, coupling);
        if (coupling <= kRotationTol) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(u[p], u[q], c, s);
        rotate(v[p], v[q], c, s);
      }
    }
  }
  if (!converged) throw SvdNotConverged(sweep, residual);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(u[j], u[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Columns us(n);
  Columns vs(n);
  std::vector<double> sorted(n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = sigma[order[k]];
    us[k] = u[order[k]];
    vs[k] = v[order[k]];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (sorted[k] > 0.0) {
      for (double& x : us[k]) x /= sorted[k];
    } else {
      complete_basis(us, k);
    }
  }

  SingularDecomposition out{DenseMatrix(m, n), std::move(sorted), DenseMatrix(n, n), 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = us[k][i];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vs[k][i];
  }
  out.rank_tol = 1e-10 * out.singular_values.front() * static_cast<double>(std::max(m, n));
  return out;
}

}  // namespace

SvdNotConverged::SvdNotConverged(int sweeps, double residual)
    : std::runtime_error("svd: no convergence after " + std::to_string(sweeps) +
                         " sweeps, residual coupling " + std::to_string(residual)),
      sweeps_(sweeps),
      residual_(residual) {}

std::size_t SingularDecomposition::rank() const {
  return static_cast<std::size_t>(
      std::count_if(singular_values.begin(), singular_values.end(),
                    [this](double s) { return s > rank_tol; }));
}

DenseMatrix SingularDecomposition::reconstruct() const {
  DenseMatrix a(u.rows(), v.rows());
  for (std::size_t k = 0; k < singular_values.size(); ++k) {
    const double s = singular_values[k];
    for (std::size_t i = 0; i < u.rows(); ++i)
      for (std::size_t j = 0; j < v.rows(); ++j) a(i, j) += s * u(i, k) * v(j, k);
  }
  return a;
}

SingularDecomposition svd(const DenseMatrix& a, int max_sweeps) {
  if (a.empty()) throw std::invalid_argument("svd: empty matrix");
  // Work on a / max|a_ij| so the column dot products cannot overflow.
  double scale = 0.0;
  for (double x : a.values()) scale = std::max(scale, std::abs(x));
  DenseMatrix b = a.rows() >= a.cols() ? a : a.transposed();
  if (scale > 0.0) b *= 1.0 / scale;
  SingularDecomposition t = jacobi_tall(b, max_sweeps);
  if (scale > 0.0) {
    for (double& s : t.singular_values) s *= scale;
    t.rank_tol *= scale;
  }
  if (a.rows() < a.cols()) std::swap(t.u, t.v);
  return t;
}

}  // namespace dsgd
