#include "dsgd/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace dsgd {

ConstantsQ ConstantsQ::make(NormTag q, std::size_t width) {
  const double n = static_cast<double>(width);
  if (q == NormTag::Q2) return {std::sqrt(n), 4.0 * std::sqrt(n), 2.0};
  return {1.0, 4.0 * n, 2.0 * n};
}

ConstantsQ ConstantsQ::for_arch(const NetworkArch& arch) {
  return make(arch.q, arch.max_width());
}

BoundTerms hessian_bound_terms(std::span<const double> z, const Activation& act,
                               const ConstantsQ& k) {
  const double a1 = act.sup_abs_d1;
  const double a2 = act.sup_abs_d2;
  BoundTerms t;
  // prefix = a1^{2(j-1)} prod_{i<j} z_i^2, i.e. r_{j-1}^2.
  double prefix = 1.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    t.v = a2 * z[j] * z[j] * prefix + a1 * z[j] * t.v;
    t.r *= a1 * z[j];
    prefix = t.r * t.r;
  }
  const double c2 = k.c * k.c;
  t.s = k.d2 * c2 * a1 * a1 * t.r * t.r + k.d1 * c2 * a1 * a1 * t.v + k.d1 * c2 * a2 * t.r;
  return t;
}

BoundPolynomials bound_polynomials(const NetworkArch& arch, std::span<const double> layer_norms) {
  const std::size_t K = arch.layers();
  if (layer_norms.size() != K) throw std::invalid_argument("bound_polynomials: norm count mismatch");
  const ConstantsQ k = ConstantsQ::for_arch(arch);
  BoundPolynomials out;
  out.layer_norms.assign(layer_norms.begin(), layer_norms.end());
  out.r.resize(K);
  out.v.resize(K);
  out.s.resize(K);
  out.p.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const BoundTerms t = hessian_bound_terms(layer_norms.subspan(i + 1), arch.activation, k);
    out.r[i] = t.r;
    out.v[i] = t.v;
    out.s[i] = t.s;
    out.p[i] = std::sqrt(t.s + 1.0);
  }
  return out;
}

BoundPolynomials bound_polynomials(const NetworkParams& params) {
  std::vector<double> norms(params.weights.size(), 0.0);
  // No p_i reads |w_1|_q, so its (possibly large) SVD is skipped.
  for (std::size_t k = 1; k < norms.size(); ++k)
    norms[k] = operator_norm(params.weights[k], params.arch.q);
  return bound_polynomials(params.arch, norms);
}

LocalDualNorm local_dual_grad_norm(const BoundPolynomials& bounds, NormTag q, const BlockVector& g) {
  if (g.size() != bounds.p.size()) throw std::invalid_argument("local_dual_grad_norm: layer count");
  LocalDualNorm out;
  out.ratios.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.ratios[i] = dual_norm(g[i], q) / bounds.p[i];
    out.value = std::max(out.value, out.ratios[i]);
  }
  return out;
}

LocalDualNorm local_dual_grad_norm(const NetworkParams& params, const BlockVector& g) {
  if (!same_shapes(params.weights, g))
    throw std::invalid_argument("local_dual_grad_norm: gradient shape mismatch");
  return local_dual_grad_norm(bound_polynomials(params), params.arch.q, g);
}

LayerUpdate network_duality_map(const BoundPolynomials& bounds, NormTag q, const BlockVector& g) {
  LocalDualNorm n = local_dual_grad_norm(bounds, q, g);
  std::size_t star = 0;
  for (std::size_t i = 1; i < n.ratios.size(); ++i)
    if (n.ratios[i] > n.ratios[star]) star = i;
  DenseMatrix delta = duality_map(g[star], q);
  delta *= 1.0 / (bounds.p[star] * bounds.p[star]);
  return {star, std::move(delta), std::move(n)};
}

LayerUpdate network_duality_map(const NetworkParams& params, const BlockVector& g) {
  if (!same_shapes(params.weights, g))
    throw std::invalid_argument("network_duality_map: gradient shape mismatch");
  return network_duality_map(bound_polynomials(params), params.arch.q, g);
}

double finsler_norm(const NetworkParams& params, const BlockVector& u) {
  if (!same_shapes(params.weights, u)) throw std::invalid_argument("finsler_norm: shape mismatch");
  const BoundPolynomials b = bound_polynomials(params);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += b.p[i] * operator_norm(u[i], params.arch.q);
  return s;
}

ProductWeights NetworkDualityStructure::weights_at(const BlockVector& w) const {
  return ProductWeights(bound_polynomials(NetworkParams(arch_, w)).p);
}

double NetworkDualityStructure::local_norm(const BlockVector& w, const BlockVector& u) const {
  return finsler_norm(NetworkParams(arch_, w), u);
}

double NetworkDualityStructure::local_dual_norm(const BlockVector& w, const BlockVector& ell) const {
  return local_dual_grad_norm(NetworkParams(arch_, w), ell).value;
}

Direction NetworkDualityStructure::duality_map_at(const BlockVector& w,
                                                  const BlockVector& ell) const {
  LayerUpdate u = network_duality_map(NetworkParams(arch_, w), ell);
  Direction d{zeros_like(w), u.layer};
  d.delta[u.layer] = std::move(u.delta);
  return d;
}

NetworkObjective::NetworkObjective(NetworkArch arch, const Dataset& data, std::size_t batch_size)
    : arch_(std::move(arch)), data_(data), batch_(batch_size) {
  if (batch_ == 0) throw std::invalid_argument("NetworkObjective: batch size must be positive");
}

double NetworkObjective::value(const BlockVector& w) const {
  return objective_value(NetworkParams(arch_, w), data_);
}

BlockVector NetworkObjective::derivative(const BlockVector& w) const {
  return objective_and_layer_grads(NetworkParams(arch_, w), data_).grads;
}

std::vector<std::size_t> NetworkObjective::sample_batch(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  std::vector<std::size_t> idx(batch_);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

BlockVector NetworkObjective::stochastic_derivative(const BlockVector& w,
                                                    std::mt19937_64& rng) const {
  const std::vector<std::size_t> idx = sample_batch(rng);
  return objective_and_layer_grads(NetworkParams(arch_, w), data_, std::span<const std::size_t>(idx))
      .grads;
}

}  // namespace dsgd
