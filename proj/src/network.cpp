#include "dsgd/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dsgd {

NetworkArch::NetworkArch(std::vector<std::size_t> layer_sizes, Activation act, NormTag norm)
    : sizes(std::move(layer_sizes)), activation(act), q(norm) {
  if (sizes.size() < 2) throw std::invalid_argument("NetworkArch: need at least one layer");
  for (std::size_t n : sizes)
    if (n == 0) throw std::invalid_argument("NetworkArch: layer widths must be positive");
}

std::size_t NetworkArch::max_width() const {
  return *std::max_element(sizes.begin(), sizes.end());
}

NetworkParams::NetworkParams(NetworkArch a, BlockVector w) : arch(std::move(a)), weights(std::move(w)) {
  if (weights.size() != arch.layers())
    throw std::invalid_argument("NetworkParams: expected " + std::to_string(arch.layers()) +
                                " weight matrices, got " + std::to_string(weights.size()));
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != arch.sizes[k + 1] || weights[k].cols() != arch.sizes[k])
      throw std::invalid_argument("NetworkParams: layer " + std::to_string(k + 1) +
                                  " has wrong shape");
    if (!weights[k].all_finite())
      throw std::invalid_argument("NetworkParams: non-finite weight in layer " +
                                  std::to_string(k + 1));
  }
}

NetworkParams::NetworkParams(NetworkArch a) : arch(std::move(a)) {
  for (std::size_t k = 0; k < arch.layers(); ++k)
    weights.emplace_back(arch.sizes[k + 1], arch.sizes[k]);
}

NetworkParams NetworkParams::uniform(NetworkArch a, std::mt19937_64& rng, double scale) {
  NetworkParams p(std::move(a));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& w : p.weights)
    for (double& x : w.values()) x = u(rng);
  return p;
}

Dataset::Dataset(std::size_t input_dim, std::size_t target_dim, std::vector<double> inputs,
                 std::vector<double> targets)
    : input_dim_(input_dim), target_dim_(target_dim), inputs_(std::move(inputs)),
      targets_(std::move(targets)) {
  if (input_dim == 0 || target_dim == 0)
    throw std::invalid_argument("Dataset: dimensions must be positive");
  if (inputs_.size() % input_dim != 0)
    throw std::invalid_argument("Dataset: input buffer is not a whole number of rows");
  count_ = inputs_.size() / input_dim;
  if (targets_.size() != count_ * target_dim)
    throw std::invalid_argument("Dataset: " + std::to_string(count_) + " inputs but " +
                                std::to_string(targets_.size() / target_dim) + " targets");
  auto bounded = [](double x) { return std::isfinite(x) && std::abs(x) <= 1.0; };
  if (!std::all_of(inputs_.begin(), inputs_.end(), bounded))
    throw std::invalid_argument("Dataset: inputs must satisfy |y|_inf <= 1");
  if (!std::all_of(targets_.begin(), targets_.end(), bounded))
    throw std::invalid_argument("Dataset: targets must satisfy |z|_inf <= 1");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> in;
  std::vector<double> tg;
  in.reserve(indices.size() * input_dim_);
  tg.reserve(indices.size() * target_dim_);
  for (std::size_t i : indices) {
    if (i >= count_) throw std::out_of_range("Dataset::subset: index out of range");
    const auto y = input(i);
    const auto z = target(i);
    in.insert(in.end(), y.begin(), y.end());
    tg.insert(tg.end(), z.begin(), z.end());
  }
  return Dataset(input_dim_, target_dim_, std::move(in), std::move(tg));
}

namespace {

void check_compatible(const NetworkParams& params, const Dataset& data) {
  if (params.arch.inputs() != data.input_dim() || params.arch.outputs() != data.target_dim())
    throw std::invalid_argument("network/dataset dimension mismatch");
}

// Per-thread scratch for one forward/backward pass.
struct Workspace {
  std::vector<std::vector<double>> pre;    // a^1..a^K (index k-1)
  std::vector<std::vector<double>> state;  // x^0..x^K
  std::vector<std::vector<double>> delta;  // dJ/da^k (index k-1)

  explicit Workspace(const NetworkArch& arch) {
    const std::size_t K = arch.layers();
    state.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) state[k].resize(arch.sizes[k]);
    pre.resize(K);
    delta.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      pre[k].resize(arch.sizes[k + 1]);
      delta[k].resize(arch.sizes[k + 1]);
    }
  }
};

void forward_into(const NetworkParams& params, std::span<const double> y, Workspace& ws) {
  const Activation& act = params.arch.activation;
  std::copy(y.begin(), y.end(), ws.state[0].begin());
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    const DenseMatrix& w = params.weights[k];
    const std::vector<double>& x = ws.state[k];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const auto row = w.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * x[j];
      ws.pre[k][i] = s;
      ws.state[k + 1][i] = act.value(s);
    }
  }
}

// Adds the example's gradient into `acc` and returns its loss.
double accumulate_example(const NetworkParams& params, std::span<const double> y,
                          std::span<const double> z, Workspace& ws, BlockVector& acc) {
  forward_into(params, y, ws);
  const Activation& act = params.arch.activation;
  const std::size_t K = params.weights.size();
  const std::vector<double>& out = ws.state[K];
  double l = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = out[i] - z[i];
    l += r * r;
    ws.delta[K - 1][i] = 2.0 * r * act.d1(ws.pre[K - 1][i]);
  }
  for (std::size_t k = K; k-- > 0;) {
    const std::vector<double>& d = ws.delta[k];
    const std::vector<double>& x = ws.state[k];
    DenseMatrix& g = acc[k];
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double di = d[i];
      if (di == 0.0) continue;
      auto grow = g.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) grow[j] += di * x[j];
    }
    if (k == 0) break;
    const DenseMatrix& w = params.weights[k];
    std::vector<double>& prev = ws.delta[k - 1];
    std::fill(prev.begin(), prev.end(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double di = d[i];
      if (di == 0.0) continue;
      const auto row = w.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) prev[j] += row[j] * di;
    }
    for (std::size_t j = 0; j < prev.size(); ++j) prev[j] *= act.d1(ws.pre[k - 1][j]);
  }
  return l;
}

std::vector<std::size_t> resolve_indices(const Dataset& data,
                                         std::optional<std::span<const std::size_t>> subset) {
  std::vector<std::size_t> idx;
  if (subset) {
    if (subset->empty()) throw std::invalid_argument("objective: empty subset");
    for (std::size_t i : *subset)
      if (i >= data.size()) throw std::out_of_range("objective: subset index out of range");
    idx.assign(subset->begin(), subset->end());
  } else {
    if (data.size() == 0) throw std::invalid_argument("objective: empty dataset");
    idx.resize(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  return idx;
}

struct Partial {
  double loss = 0.0;
  BlockVector grads;
};

// Fixed pairwise tree; the shape depends only on the number of blocks.
template <typename Combine>
void tree_reduce(std::size_t count, Combine&& combine) {
  for (std::size_t stride = 1; stride < count; stride *= 2)
    for (std::size_t i = 0; i + stride < count; i += 2 * stride) combine(i, i + stride);
}

}  // namespace

std::vector<std::vector<double>> forward(const NetworkParams& params, std::span<const double> y) {
  if (y.size() != params.arch.inputs()) throw std::invalid_argument("forward: input size mismatch");
  Workspace ws(params.arch);
  forward_into(params, y, ws);
  return {ws.state.begin() + 1, ws.state.end()};
}

double loss(std::span<const double> x, std::span<const double> z) {
  if (x.size() != z.size()) throw std::invalid_argument("loss: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - z[i]) * (x[i] - z[i]);
  return s;
}

ObjectiveGrad objective_and_layer_grads(const NetworkParams& params, const Dataset& data,
                                        std::optional<std::span<const std::size_t>> subset) {
  check_compatible(params, data);
  const std::vector<std::size_t> idx = resolve_indices(data, subset);
  const std::size_t n = idx.size();
  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<Partial> partial(blocks);

#pragma omp parallel
  {
    Workspace ws(params.arch);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      Partial& p = partial[static_cast<std::size_t>(b)];
      p.grads = zeros_like(params.weights);
      const std::size_t lo = static_cast<std::size_t>(b) * kGradientBlock;
      const std::size_t hi = std::min(n, lo + kGradientBlock);
      for (std::size_t e = lo; e < hi; ++e)
        p.loss += accumulate_example(params, data.input(idx[e]), data.target(idx[e]), ws, p.grads);
    }
  }

  tree_reduce(blocks, [&](std::size_t into, std::size_t from) {
    partial[into].loss += partial[from].loss;
    for (std::size_t k = 0; k < partial[into].grads.size(); ++k)
      partial[into].grads[k] += partial[from].grads[k];
  });

  const double scale = 1.0 / static_cast<double>(n);
  ObjectiveGrad out{partial[0].loss * scale, std::move(partial[0].grads)};
  for (auto& g : out.grads) g *= scale;
  return out;
}

ObjectiveGrad objective_and_layer_grads_serial(
    const NetworkParams& params, const Dataset& data,
    std::optional<std::span<const std::size_t>> subset) {
  check_compatible(params, data);
  const std::vector<std::size_t> idx = resolve_indices(data, subset);
  const Activation& act = params.arch.activation;
  const std::size_t K = params.weights.size();

  ObjectiveGrad out{0.0, zeros_like(params.weights)};
  for (std::size_t e : idx) {
    // Forward pass keeping every layer.
    std::vector<std::vector<double>> x{std::vector<double>(data.input(e).begin(), data.input(e).end())};
    std::vector<std::vector<double>> a;
    for (std::size_t k = 0; k < K; ++k) {
      const DenseMatrix& w = params.weights[k];
      std::vector<double> ak(w.rows(), 0.0);
      std::vector<double> xk(w.rows());
      for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) ak[i] += w(i, j) * x[k][j];
        xk[i] = act.value(ak[i]);
      }
      a.push_back(std::move(ak));
      x.push_back(std::move(xk));
    }
    const auto z = data.target(e);
    std::vector<double> d(params.arch.outputs());
    for (std::size_t i = 0; i < d.size(); ++i) {
      out.value += (x[K][i] - z[i]) * (x[K][i] - z[i]);
      d[i] = 2.0 * (x[K][i] - z[i]) * act.d1(a[K - 1][i]);
    }
    for (std::size_t k = K; k-- > 0;) {
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < x[k].size(); ++j) out.grads[k](i, j) += d[i] * x[k][j];
      if (k == 0) break;
      std::vector<double> prev(x[k].size(), 0.0);
      for (std::size_t j = 0; j < prev.size(); ++j) {
        for (std::size_t i = 0; i < d.size(); ++i) prev[j] += params.weights[k](i, j) * d[i];
        prev[j] *= act.d1(a[k - 1][j]);
      }
      d = std::move(prev);
    }
  }
  const double scale = 1.0 / static_cast<double>(idx.size());
  out.value *= scale;
  for (auto& g : out.grads) g *= scale;
  return out;
}

double objective_value(const NetworkParams& params, const Dataset& data,
                       std::optional<std::span<const std::size_t>> subset) {
  check_compatible(params, data);
  const std::vector<std::size_t> idx = resolve_indices(data, subset);
  const std::size_t n = idx.size();
  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel
  {
    Workspace ws(params.arch);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kGradientBlock;
      const std::size_t hi = std::min(n, lo + kGradientBlock);
      double s = 0.0;
      for (std::size_t e = lo; e < hi; ++e) {
        forward_into(params, data.input(idx[e]), ws);
        s += loss(ws.state.back(), data.target(idx[e]));
      }
      partial[static_cast<std::size_t>(b)] = s;
    }
  }
  tree_reduce(blocks, [&](std::size_t into, std::size_t from) { partial[into] += partial[from]; });
  return partial[0] / static_cast<double>(n);
}

Evaluation evaluate(const NetworkParams& params, const Dataset& data) {
  check_compatible(params, data);
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("evaluate: empty dataset");
  const std::size_t blocks = (n + kGradientBlock - 1) / kGradientBlock;
  std::vector<double> err(blocks, 0.0);
  std::vector<std::size_t> hits(blocks, 0);
#pragma omp parallel
  {
    Workspace ws(params.arch);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kGradientBlock;
      const std::size_t hi = std::min(n, lo + kGradientBlock);
      for (std::size_t e = lo; e < hi; ++e) {
        forward_into(params, data.input(e), ws);
        const auto& out = ws.state.back();
        const auto z = data.target(e);
        err[static_cast<std::size_t>(b)] += loss(out, z);
        const auto pred = std::max_element(out.begin(), out.end()) - out.begin();
        const auto truth = std::max_element(z.begin(), z.end()) - z.begin();
        if (pred == truth) ++hits[static_cast<std::size_t>(b)];
      }
    }
  }
  tree_reduce(blocks, [&](std::size_t into, std::size_t from) {
    err[into] += err[from];
    hits[into] += hits[from];
  });
  return {err[0] / static_cast<double>(n), static_cast<double>(hits[0]) / static_cast<double>(n)};
}

}  // namespace dsgd
