#ifndef DSGD_VERIFY_HPP
#define DSGD_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/matrix.hpp"
#include "dsgd/network.hpp"
#include "dsgd/norms.hpp"

namespace dsgd {

// Finite differences ---------------------------------------------------------

struct FDSettings {
  double h = 1e-5;
  double rel_tol = 1e-5;
};

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<std::vector<double>(std::span<const double>)>;

class FiniteDifferenceError : public std::runtime_error {
 public:
  explicit FiniteDifferenceError(std::size_t coordinate);
  std::size_t coordinate() const { return coord_; }

 private:
  std::size_t coord_;
};

/// Central-difference gradient.
std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> w,
                                const FDSettings& s = {});

/// Central second differences; the result is symmetric by construction.
DenseMatrix fd_hessian(const ScalarFn& f, std::span<const double> w, double h);

/// Jacobian of `grad` by central differences, column j = d grad / d w_j.
DenseMatrix fd_jacobian(const VectorFn& grad, std::span<const double> w, double h);

/// Max over coordinates of |a - b| / max(1, |b|).
double max_relative_error(std::span<const double> a, std::span<const double> b);

// Bilinear form norms ----------------------------------------------------------

/// Norm of the bilinear form B(u, v) = vec(u)^T H vec(v) on rows x cols
/// matrices carrying the induced q operator norm (vectors are cols == 1).
///
/// QInf is exact: the unit ball is the convex hull of matrices with a single
/// +-1 per row, so the sup over u is a max over those vertices and the sup
/// over v is a dual norm. Q2 uses alternating maximization from several
/// random starts and returns the best value found (a lower bound).
double bilinear_form_norm(const DenseMatrix& H, std::size_t rows, std::size_t cols, NormTag q,
                          std::mt19937_64& rng, int restarts = 8);

// Audits -------------------------------------------------------------------------

/// Pass/fail counts for one audit, printable as text or a CSV row.
struct AuditSummary {
  std::string name;
  std::size_t trials = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t inconclusive = 0;
  /// Largest observed (measured / allowed) ratio; <= 1 means within bound.
  double max_ratio = 0.0;

  bool ok() const { return failed == 0 && trials > 0; }
  std::string to_text() const;
};

void write_audit_csv(std::ostream& os, const std::vector<AuditSummary>& rows);

/// Both duality-map axioms for random matrices with U(-1,1) entries and
/// shapes up to max_dim x max_dim, relative tolerance `tol`.
AuditSummary audit_duality_axioms(std::size_t trials, NormTag q, std::uint64_t seed,
                                  std::size_t max_dim = 8, double tol = 1e-9);

enum class AuditStatus { Pass, Fail, Inconclusive };

struct LayerHessianAudit {
  double estimate = 0.0;   // bilinear q-norm of the finite-difference Hessian
  double bound = 0.0;      // p_i(w)^2
  double asymmetry = 0.0;  // max |H - H^T|, a proxy for finite-difference noise
  AuditStatus status = AuditStatus::Pass;
};

inline constexpr std::size_t kHessianAuditMaxWidth = 6;

/// Layer-`layer` (0-based) Hessian of the mean squared error by central
/// differences of the analytic layer gradient, measured in the bilinear
/// q-norm and compared with p_i(w)^2 + slack. Inconclusive when the
/// asymmetry exceeds 1e-4 of the bound.
LayerHessianAudit audit_layer_hessian(const NetworkParams& params, const Dataset& data,
                                      std::size_t layer, std::uint64_t seed, double h = 1e-5,
                                      double slack = 1e-3);

/// Random configurations with K layers, widths in [1, max_width], weights
/// U(-weight_scale, weight_scale) and a single random data pair; every layer
/// of every configuration is audited.
AuditSummary audit_hessian_configs(std::size_t K, NormTag q, std::size_t configs,
                                   std::uint64_t seed, std::size_t max_width = 5,
                                   double weight_scale = 2.0,
                                   const Activation& act = Activation::sigmoid());

struct QuadraticViolation {
  BlockVector w;
  BlockVector eta;
  double eps = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct QuadraticAuditReport {
  AuditSummary summary;
  std::optional<QuadraticViolation> first_violation;
};

/// |f(w + e rho_w(eta)) - f(w) - e <df(w), rho_w(eta)>| <= e^2 |eta|_w^2 / 2 + slack
/// for random w ~ U(-weight_scale, weight_scale), random functionals eta and
/// e ~ U(0, 2).
QuadraticAuditReport audit_quadratic_bound(const NetworkArch& arch, const Dataset& data,
                                           std::size_t trials, std::uint64_t seed,
                                           double weight_scale = 2.0, double slack = 1e-9);

// Unbounded-derivative counterexample ---------------------------------------------

/// One input, one hidden unit, one output, each with a bias; input x = 1 and
/// target 0, so E = sigmoid(w2 sigmoid(w1 + b1) + b2)^2.
struct CounterexamplePoint {
  double w1 = 0.0;
  double b1 = 0.0;
  double w2 = 0.0;
  double b2 = 0.0;
};

double counterexample_E(const CounterexamplePoint& p);

/// (w1, b1, eps, y - eps sigmoid(w1 + b1)) with y the maximizer of sigmoid''.
CounterexamplePoint z_eps(double w1, double b1, double eps);

/// Closed-form derivatives of the network output f and of E = f^2.
struct CounterexampleDerivatives {
  double f = 0.0;
  double f_w1 = 0.0;
  double f_w2 = 0.0;
  double f_w1w2 = 0.0;
  double f_w2w2 = 0.0;
  double f_w1w2w2 = 0.0;
  double E_w1w2 = 0.0;
  double E_w1w2w2 = 0.0;
};

CounterexampleDerivatives counterexample_derivatives(const CounterexamplePoint& p);

/// d^2 E / dw1 dw2 by nested central differences.
double fd_counterexample_w1w2(const CounterexamplePoint& p, double h = 1e-3);
/// d^3 E / dw1 dw2^2 by nested central differences.
double fd_counterexample_w1w2w2(const CounterexamplePoint& p, double h = 1e-3);

}  // namespace dsgd

#endif  // DSGD_VERIFY_HPP
