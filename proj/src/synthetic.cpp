#include "dsgd/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace dsgd {

namespace {

SyntheticData teacher(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const NetworkArch arch(spec.sizes, spec.activation, NormTag::Q2);
  NetworkParams w = NetworkParams::uniform(arch, rng, spec.teacher_scale);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t d = arch.inputs(), o = arch.outputs();
  std::vector<double> x(spec.m * d), z(spec.m * o);
  for (std::size_t i = 0; i < spec.m; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = u(rng);
    const auto out = forward(w, std::span<const double>(x.data() + i * d, d)).back();
    for (std::size_t j = 0; j < o; ++j) z[i * o + j] = std::clamp(out[j], 0.0, 1.0);
  }
  return {Dataset(d, o, std::move(x), std::move(z)), std::move(w)};
}

SyntheticData clusters(const SyntheticSpec& spec) {
  if (spec.sizes.size() < 2) throw std::invalid_argument("clusters: need input and output sizes");
  const std::size_t d = spec.sizes.front(), o = spec.sizes.back();
  if (d == 0 || o < 2) throw std::invalid_argument("clusters: need d >= 1 and at least 2 targets");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.cluster_spread);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(spec.m * d), z(spec.m * o, 0.0);
  for (std::size_t i = 0; i < spec.m; ++i) {
    const int label = coin(rng) ? 1 : 0;
    const double centre = label ? 0.5 : -0.5;
    for (std::size_t j = 0; j < d; ++j)
      x[i * d + j] = std::clamp(centre + noise(rng), -1.0, 1.0);
    z[i * o + label] = 1.0;
  }
  return {Dataset(d, o, std::move(x), std::move(z)), std::nullopt};
}

}  // namespace

SyntheticData synthetic_dataset(const SyntheticSpec& spec) {
  if (spec.m == 0) throw std::invalid_argument("synthetic_dataset: m must be >= 1");
  if (spec.generator == "teacher") return teacher(spec);
  if (spec.generator == "clusters") return clusters(spec);
  throw std::invalid_argument("synthetic_dataset: unknown generator '" + spec.generator + "'");
}

}  // namespace dsgd
