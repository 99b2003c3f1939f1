#ifndef DSGD_FINSLER_HPP
#define DSGD_FINSLER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "dsgd/matrix.hpp"
#include "dsgd/norms.hpp"

namespace dsgd {

/// Update direction produced by a duality map. `block` names the single
/// non-zero factor when the structure is block-sparse.
struct Direction {
  BlockVector delta;
  std::optional<std::size_t> block;
};

/// A Finsler structure (a norm at every point) together with a duality map
/// at every point.
class DualityStructure {
 public:
  virtual ~DualityStructure() = default;
  /// Primal norm of tangent vector `u` at `w`.
  virtual double local_norm(const BlockVector& w, const BlockVector& u) const = 0;
  /// Dual norm of functional `ell` at `w`.
  virtual double local_dual_norm(const BlockVector& w, const BlockVector& ell) const = 0;
  virtual Direction duality_map_at(const BlockVector& w, const BlockVector& ell) const = 0;
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const BlockVector& w) const = 0;
  virtual BlockVector derivative(const BlockVector& w) const = 0;
  /// Declared lower bound f*.
  virtual double lower_bound() const { return 0.0; }
};

/// Objective with an unbiased derivative estimator.
class StochasticObjective : public Objective {
 public:
  virtual BlockVector stochastic_derivative(const BlockVector& w, std::mt19937_64& rng) const = 0;
};

// Product spaces ------------------------------------------------------------

/// Positive per-factor coefficients p_1..p_K of the product norm
/// sum_i p_i |x_i|.
class ProductWeights {
 public:
  explicit ProductWeights(std::vector<double> coefficients);
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Norm, dual norm and duality map of one factor space.
struct FactorGeometry {
  std::function<double(const DenseMatrix&)> norm;
  std::function<double(const DenseMatrix&)> dual_norm;
  std::function<DenseMatrix(const DenseMatrix&)> duality_map;
};

/// Matrix factor with the induced q operator norm.
FactorGeometry matrix_geometry(NormTag q);
/// Factor with the Euclidean (Frobenius) norm; its duality map is the identity.
FactorGeometry euclidean_geometry();
/// Scalar factor (1x1 block) with absolute value. Same as euclidean_geometry
/// restricted to 1x1, kept separate for readability at call sites.
FactorGeometry absolute_value_geometry();

/// Dual norm max_i |ell_i| / p_i. Like every product helper below, throws
/// std::invalid_argument when the list lengths disagree.
double product_dual_norm(const std::vector<double>& factor_dual_norms, const ProductWeights& p);
double product_dual_norm(const BlockVector& ells, const ProductWeights& p,
                         const std::vector<FactorGeometry>& factors);

/// Index maximizing |ell_i| / p_i, smallest index on ties.
std::size_t product_argmax(const std::vector<double>& factor_dual_norms, const ProductWeights& p);

/// Zero everywhere except factor i*, which holds rho_{i*}(ell_{i*}) / p_{i*}^2.
/// For ell == 0 the index is 0 and the output is zero.
Direction product_duality_map(const BlockVector& ells, const ProductWeights& p,
                              const std::vector<FactorGeometry>& factors);

double product_norm(const BlockVector& u, const ProductWeights& p,
                    const std::vector<FactorGeometry>& factors);

/// Product structure whose coefficients may depend on the base point.
class WeightedProductStructure : public DualityStructure {
 public:
  using WeightFn = std::function<ProductWeights(const BlockVector&)>;
  WeightedProductStructure(std::vector<FactorGeometry> factors, WeightFn weights);

  double local_norm(const BlockVector& w, const BlockVector& u) const override;
  double local_dual_norm(const BlockVector& w, const BlockVector& ell) const override;
  Direction duality_map_at(const BlockVector& w, const BlockVector& ell) const override;

 private:
  std::vector<FactorGeometry> factors_;
  WeightFn weights_;
};

/// Same Euclidean norm at every point; rho is the identity.
class EuclideanStructure : public DualityStructure {
 public:
  double local_norm(const BlockVector& w, const BlockVector& u) const override;
  double local_dual_norm(const BlockVector& w, const BlockVector& ell) const override;
  Direction duality_map_at(const BlockVector& w, const BlockVector& ell) const override;
};

// Drivers -------------------------------------------------------------------

/// Metrics for iterate w(t), recorded before the update to w(t+1).
struct RunRecord {
  std::size_t t = 0;
  double objective = 0.0;
  double dual_grad_norm = 0.0;
  std::optional<std::size_t> block;
  double step = 0.0;
};

struct DsgdResult {
  std::vector<RunRecord> records;  // w(1) .. w(T)
  BlockVector final_point;         // w(T + 1)
};

struct SdsgdResult {
  std::vector<RunRecord> records;
  std::optional<std::size_t> tau;
  BlockVector final_point;
};

class NonFiniteIterate : public std::runtime_error {
 public:
  NonFiniteIterate(std::size_t t, const std::string& what);
  std::size_t iteration() const { return t_; }

 private:
  std::size_t t_;
};

/// Constant step-size duality structure gradient descent for T iterations.
/// Requires 0 < eps < 2 / L.
DsgdResult run_dsgd(const Objective& obj, const DualityStructure& ds, BlockVector w1, double eps,
                    std::size_t iterations, double lipschitz = 1.0);

/// Stochastic variant. The exact derivative is evaluated at every iterate
/// only for the stopping test and the recorded metrics; updates use the
/// stochastic estimate. tau is the first t with |df(w(t))|_{w(t)}^2 <= gamma,
/// or empty when max_iters updates pass without stopping.
SdsgdResult run_sdsgd(const StochasticObjective& obj, const DualityStructure& ds, BlockVector w1,
                      double eps, double gamma, std::size_t max_iters, std::mt19937_64& rng,
                      double lipschitz = 1.0);

/// Smallest T with T >= (1/delta^2) * 2G / (eps (2 - L eps)).
std::size_t dsgd_bound_T(double initial_gap, double eps, double lipschitz, double delta);

/// Right-hand side 2 (f(w1) - f*) / (T eps (2 - L eps)) bounding the minimum
/// squared local dual gradient norm over T iterates.
double dsgd_certificate(double initial_gap, double eps, double lipschitz, std::size_t iterations);

}  // namespace dsgd

#endif  // DSGD_FINSLER_HPP
