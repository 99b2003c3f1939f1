#ifndef DSGD_NETWORK_HPP
#define DSGD_NETWORK_HPP

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dsgd/activation.hpp"
#include "dsgd/matrix.hpp"
#include "dsgd/norms.hpp"

namespace dsgd {

/// Bias-free multi-layer perceptron shape: n_0 inputs, K non-input layers.
struct NetworkArch {
  std::vector<std::size_t> sizes;  // n_0 .. n_K
  Activation activation = Activation::sigmoid();
  NormTag q = NormTag::Q2;

  NetworkArch() = default;
  NetworkArch(std::vector<std::size_t> layer_sizes, Activation act, NormTag norm);

  std::size_t layers() const { return sizes.size() - 1; }
  std::size_t inputs() const { return sizes.front(); }
  std::size_t outputs() const { return sizes.back(); }
  /// Largest width over all layers including the input layer.
  std::size_t max_width() const;
};

/// Weights w_1..w_K with w_k of shape n_k x n_{k-1}.
struct NetworkParams {
  NetworkArch arch;
  BlockVector weights;

  NetworkParams(NetworkArch a, BlockVector w);

  /// Zero weights.
  explicit NetworkParams(NetworkArch a);

  /// Entries drawn from U(-scale, scale).
  static NetworkParams uniform(NetworkArch a, std::mt19937_64& rng, double scale = 0.5);
};

/// Training pairs (y_i, z_i) stored row-major. Construction enforces
/// |y_i|_inf <= 1 and |z_i|_inf <= 1.
class Dataset {
 public:
  Dataset(std::size_t input_dim, std::size_t target_dim, std::vector<double> inputs,
          std::vector<double> targets);

  std::size_t size() const { return count_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t target_dim() const { return target_dim_; }
  std::span<const double> input(std::size_t i) const {
    return {inputs_.data() + i * input_dim_, input_dim_};
  }
  std::span<const double> target(std::size_t i) const {
    return {targets_.data() + i * target_dim_, target_dim_};
  }

  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t input_dim_;
  std::size_t target_dim_;
  std::size_t count_;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

/// Layer states x^1 .. x^K for input y.
std::vector<std::vector<double>> forward(const NetworkParams& params, std::span<const double> y);

/// Squared Euclidean distance sum_i (x_i - z_i)^2.
double loss(std::span<const double> x, std::span<const double> z);

struct ObjectiveGrad {
  double value = 0.0;
  BlockVector grads;  // g_1 .. g_K
};

/// Mean loss over `subset` (all examples when absent) and its per-layer
/// derivatives by reverse-mode accumulation.
///
/// Examples are processed in fixed blocks of kGradientBlock; blocks run in
/// parallel and their partial sums are combined by a fixed pairwise tree, so
/// the result does not depend on the OpenMP thread count.
ObjectiveGrad objective_and_layer_grads(const NetworkParams& params, const Dataset& data,
                                        std::optional<std::span<const std::size_t>> subset = {});

/// Single-threaded left-to-right reference for objective_and_layer_grads.
/// Agrees with it to rounding (reduction order differs).
ObjectiveGrad objective_and_layer_grads_serial(
    const NetworkParams& params, const Dataset& data,
    std::optional<std::span<const std::size_t>> subset = {});

inline constexpr std::size_t kGradientBlock = 64;

/// Mean loss only (forward passes). Parallel over examples, same fixed
/// block reduction as the gradient kernel.
double objective_value(const NetworkParams& params, const Dataset& data,
                       std::optional<std::span<const std::size_t>> subset = {});

struct Evaluation {
  double error = 0.0;
  /// Fraction of examples whose output argmax equals the target argmax.
  double accuracy = 0.0;
};

Evaluation evaluate(const NetworkParams& params, const Dataset& data);

}  // namespace dsgd

#endif  // DSGD_NETWORK_HPP
