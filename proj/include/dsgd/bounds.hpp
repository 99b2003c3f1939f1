#ifndef DSGD_BOUNDS_HPP
#define DSGD_BOUNDS_HPP

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dsgd/finsler.hpp"
#include "dsgd/network.hpp"

namespace dsgd {

/// Width constants c_q, d_{q,1}, d_{q,2} for output width n:
///   q = 2:   (sqrt n, 4 sqrt n, 2)
///   q = inf: (1, 4 n, 2 n)
struct ConstantsQ {
  double c = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static ConstantsQ make(NormTag q, std::size_t width);
  /// Uses the widest layer of `arch` so unequal widths stay covered.
  static ConstantsQ for_arch(const NetworkArch& arch);
};

/// r_n, v_n and s_n evaluated at z_1..z_n (n = z.size(), possibly 0).
struct BoundTerms {
  double r = 1.0;
  double v = 0.0;
  double s = 0.0;
};

BoundTerms hessian_bound_terms(std::span<const double> z, const Activation& act,
                               const ConstantsQ& k);

/// Per-layer bound data. Entry i (0-based) holds the terms of s_{K-i-1}
/// evaluated at (|w_{i+2}|_q, ..., |w_K|_q) together with
/// p_{i+1}(w) = sqrt(s + 1), which bounds the layer Hessian by p^2.
struct BoundPolynomials {
  std::vector<double> r;
  std::vector<double> v;
  std::vector<double> s;
  std::vector<double> p;
  std::vector<double> layer_norms;  // |w_k|_q; entry 0 is never read and left 0
};

BoundPolynomials bound_polynomials(const NetworkParams& params);
/// Same, from precomputed layer operator norms.
BoundPolynomials bound_polynomials(const NetworkArch& arch, std::span<const double> layer_norms);

struct LocalDualNorm {
  double value = 0.0;
  std::vector<double> ratios;  // |g_i|_q / p_i
};

LocalDualNorm local_dual_grad_norm(const NetworkParams& params, const BlockVector& g);
LocalDualNorm local_dual_grad_norm(const BoundPolynomials& bounds, NormTag q, const BlockVector& g);

struct LayerUpdate {
  std::size_t layer = 0;  // 0-based i*
  DenseMatrix delta;      // rho_q(g_{i*}) / p_{i*}^2
  LocalDualNorm norm;     // ratios that selected the layer
};

LayerUpdate network_duality_map(const NetworkParams& params, const BlockVector& g);
LayerUpdate network_duality_map(const BoundPolynomials& bounds, NormTag q, const BlockVector& g);

/// Primal local norm sum_i p_i(w) |u_i|_q.
double finsler_norm(const NetworkParams& params, const BlockVector& u);

/// The layer-wise Finsler duality structure on weight space, exposed through
/// the generic interface so the generic drivers can run on networks.
class NetworkDualityStructure : public DualityStructure {
 public:
  explicit NetworkDualityStructure(NetworkArch arch) : arch_(std::move(arch)) {}

  double local_norm(const BlockVector& w, const BlockVector& u) const override;
  double local_dual_norm(const BlockVector& w, const BlockVector& ell) const override;
  Direction duality_map_at(const BlockVector& w, const BlockVector& ell) const override;

  ProductWeights weights_at(const BlockVector& w) const;

 private:
  NetworkArch arch_;
};

/// Empirical squared error as an objective over weight blocks. The
/// stochastic derivative averages b examples drawn uniformly with
/// replacement.
class NetworkObjective : public StochasticObjective {
 public:
  NetworkObjective(NetworkArch arch, const Dataset& data, std::size_t batch_size = 1);

  double value(const BlockVector& w) const override;
  BlockVector derivative(const BlockVector& w) const override;
  BlockVector stochastic_derivative(const BlockVector& w, std::mt19937_64& rng) const override;

  std::vector<std::size_t> sample_batch(std::mt19937_64& rng) const;

 private:
  NetworkArch arch_;
  const Dataset& data_;
  std::size_t batch_;
};

}  // namespace dsgd

#endif  // DSGD_BOUNDS_HPP
