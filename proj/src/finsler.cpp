#include "dsgd/finsler.hpp"

#include <cmath>
#include <string>

namespace dsgd {

namespace {

void require_eps(double eps, double lipschitz) {
  if (!(eps > 0.0) || !(lipschitz * eps < 2.0)) {
    throw std::invalid_argument("step-size must lie in (0, 2/L); got eps=" + std::to_string(eps) +
                                " L=" + std::to_string(lipschitz));
  }
}

bool finite_blocks(const BlockVector& b) {
  for (const auto& m : b)
    if (!m.all_finite()) return false;
  return true;
}

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b || a == 0) {
    throw std::invalid_argument("product structure: " + std::to_string(a) + " functionals for " +
                                std::to_string(b) + " weights");
  }
}

}  // namespace

ProductWeights::ProductWeights(std::vector<double> coefficients) : p_(std::move(coefficients)) {
  if (p_.empty()) throw std::invalid_argument("ProductWeights: at least one factor required");
  for (double x : p_) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw std::invalid_argument("ProductWeights: coefficients must be positive and finite");
  }
}

FactorGeometry matrix_geometry(NormTag q) {
  return {[q](const DenseMatrix& a) { return operator_norm(a, q); },
          [q](const DenseMatrix& a) { return dual_norm(a, q); },
          [q](const DenseMatrix& a) { return duality_map(a, q); }};
}

FactorGeometry euclidean_geometry() {
  return {[](const DenseMatrix& a) { return frobenius_norm(a); },
          [](const DenseMatrix& a) { return frobenius_norm(a); },
          [](const DenseMatrix& a) { return a; }};
}

FactorGeometry absolute_value_geometry() { return euclidean_geometry(); }

double product_dual_norm(const std::vector<double>& factor_dual_norms, const ProductWeights& p) {
  check_lengths(factor_dual_norms.size(), p.size());
  double best = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) best = std::max(best, factor_dual_norms[i] / p[i]);
  return best;
}

double product_dual_norm(const BlockVector& ells, const ProductWeights& p,
                         const std::vector<FactorGeometry>& factors) {
  check_lengths(ells.size(), p.size());
  check_lengths(factors.size(), p.size());
  std::vector<double> norms(ells.size());
  for (std::size_t i = 0; i < ells.size(); ++i) norms[i] = factors[i].dual_norm(ells[i]);
  return product_dual_norm(norms, p);
}

std::size_t product_argmax(const std::vector<double>& factor_dual_norms, const ProductWeights& p) {
  check_lengths(factor_dual_norms.size(), p.size());
  std::size_t arg = 0;
  double best = factor_dual_norms[0] / p[0];
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double r = factor_dual_norms[i] / p[i];
    if (r > best) {
      best = r;
      arg = i;
    }
  }
  return arg;
}

Direction product_duality_map(const BlockVector& ells, const ProductWeights& p,
                              const std::vector<FactorGeometry>& factors) {
  check_lengths(ells.size(), p.size());
  check_lengths(factors.size(), p.size());
  std::vector<double> norms(ells.size());
  for (std::size_t i = 0; i < ells.size(); ++i) norms[i] = factors[i].dual_norm(ells[i]);
  const std::size_t star = product_argmax(norms, p);

  Direction out{zeros_like(ells), star};
  DenseMatrix rho = factors[star].duality_map(ells[star]);
  rho *= 1.0 / (p[star] * p[star]);
  out.delta[star] = std::move(rho);
  return out;
}

double product_norm(const BlockVector& u, const ProductWeights& p,
                    const std::vector<FactorGeometry>& factors) {
  check_lengths(u.size(), p.size());
  check_lengths(factors.size(), p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += p[i] * factors[i].norm(u[i]);
  return s;
}

WeightedProductStructure::WeightedProductStructure(std::vector<FactorGeometry> factors,
                                                   WeightFn weights)
    : factors_(std::move(factors)), weights_(std::move(weights)) {}

double WeightedProductStructure::local_norm(const BlockVector& w, const BlockVector& u) const {
  return product_norm(u, weights_(w), factors_);
}

double WeightedProductStructure::local_dual_norm(const BlockVector& w,
                                                 const BlockVector& ell) const {
  return product_dual_norm(ell, weights_(w), factors_);
}

Direction WeightedProductStructure::duality_map_at(const BlockVector& w,
                                                   const BlockVector& ell) const {
  return product_duality_map(ell, weights_(w), factors_);
}

double EuclideanStructure::local_norm(const BlockVector&, const BlockVector& u) const {
  return std::sqrt(block_inner(u, u));
}

double EuclideanStructure::local_dual_norm(const BlockVector&, const BlockVector& ell) const {
  return std::sqrt(block_inner(ell, ell));
}

Direction EuclideanStructure::duality_map_at(const BlockVector&, const BlockVector& ell) const {
  return {ell, std::nullopt};
}

NonFiniteIterate::NonFiniteIterate(std::size_t t, const std::string& what)
    : std::runtime_error("iteration " + std::to_string(t) + ": " + what), t_(t) {}

DsgdResult run_dsgd(const Objective& obj, const DualityStructure& ds, BlockVector w1, double eps,
                    std::size_t iterations, double lipschitz) {
  require_eps(eps, lipschitz);
  DsgdResult out;
  out.records.reserve(iterations);
  BlockVector w = std::move(w1);
  for (std::size_t t = 1; t <= iterations; ++t) {
    const double f = obj.value(w);
    const BlockVector g = obj.derivative(w);
    if (!std::isfinite(f)) throw NonFiniteIterate(t, "non-finite objective");
    if (!finite_blocks(g)) throw NonFiniteIterate(t, "non-finite derivative");
    Direction dir = ds.duality_map_at(w, g);
    out.records.push_back({t, f, ds.local_dual_norm(w, g), dir.block, eps});
    add_scaled(w, dir.delta, -eps);
  }
  out.final_point = std::move(w);
  return out;
}

SdsgdResult run_sdsgd(const StochasticObjective& obj, const DualityStructure& ds, BlockVector w1,
                      double eps, double gamma, std::size_t max_iters, std::mt19937_64& rng,
                      double lipschitz) {
  require_eps(eps, lipschitz);
  if (!(gamma > 0.0)) throw std::invalid_argument("run_sdsgd: gamma must be positive");
  SdsgdResult out;
  BlockVector w = std::move(w1);
  for (std::size_t t = 1;; ++t) {
    const double f = obj.value(w);
    const BlockVector exact = obj.derivative(w);
    if (!std::isfinite(f)) throw NonFiniteIterate(t, "non-finite objective");
    if (!finite_blocks(exact)) throw NonFiniteIterate(t, "non-finite derivative");
    const double norm = ds.local_dual_norm(w, exact);
    if (norm * norm <= gamma) {
      out.records.push_back({t, f, norm, std::nullopt, 0.0});
      out.tau = t;
      break;
    }
    if (t > max_iters) break;
    const BlockVector g = obj.stochastic_derivative(w, rng);
    if (!finite_blocks(g)) throw NonFiniteIterate(t, "non-finite stochastic derivative");
    Direction dir = ds.duality_map_at(w, g);
    out.records.push_back({t, f, norm, dir.block, eps});
    add_scaled(w, dir.delta, -eps);
  }
  out.final_point = std::move(w);
  return out;
}

std::size_t dsgd_bound_T(double initial_gap, double eps, double lipschitz, double delta) {
  require_eps(eps, lipschitz);
  if (!(delta > 0.0)) throw std::invalid_argument("dsgd_bound_T: delta must be positive");
  if (!(initial_gap >= 0.0)) throw std::invalid_argument("dsgd_bound_T: gap must be >= 0");
  const double t = 2.0 * initial_gap / (delta * delta * eps * (2.0 - lipschitz * eps));
  return static_cast<std::size_t>(std::ceil(t));
}

double dsgd_certificate(double initial_gap, double eps, double lipschitz, std::size_t iterations) {
  require_eps(eps, lipschitz);
  return 2.0 * initial_gap /
         (static_cast<double>(iterations) * eps * (2.0 - lipschitz * eps));
}

}  // namespace dsgd
