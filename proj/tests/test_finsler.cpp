#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dsgd/finsler.hpp"
#include "oracle.hpp"

using namespace dsgd;

namespace {

BlockVector scalars(std::initializer_list<double> v) {
  BlockVector b;
  for (double x : v) b.push_back(DenseMatrix(1, 1, {x}));
  return b;
}

std::vector<FactorGeometry> abs_factors(std::size_t k) {
  return std::vector<FactorGeometry>(k, absolute_value_geometry());
}

// f(w) = 0.5 |w|^2 over a single Euclidean block.
class HalfSquare : public StochasticObjective {
 public:
  double value(const BlockVector& w) const override { return 0.5 * block_inner(w, w); }
  BlockVector derivative(const BlockVector& w) const override { return w; }
  BlockVector stochastic_derivative(const BlockVector& w, std::mt19937_64& rng) const override {
    BlockVector g = w;
    if (noise_ == 0.0) return g;
    std::normal_distribution<double> n(0.0, noise_);
    for (auto& m : g)
      for (auto& v : m.values()) v += n(rng);
    return g;
  }
  double noise_ = 0.0;
};

// f(x, y) = x^2 y^2 on two scalar blocks.
class QuarticProduct : public Objective {
 public:
  double value(const BlockVector& w) const override {
    const double x = w[0](0, 0), y = w[1](0, 0);
    return x * x * y * y;
  }
  BlockVector derivative(const BlockVector& w) const override {
    const double x = w[0](0, 0), y = w[1](0, 0);
    return scalars({2 * x * y * y, 2 * x * x * y});
  }
};

// Block curvatures of x^2 y^2 are 2y^2 and 2x^2, so p = (sqrt(1 + 2y^2), sqrt(1 + 2x^2)).
WeightedProductStructure quartic_structure() {
  return WeightedProductStructure(abs_factors(2), [](const BlockVector& w) {
    const double x = w[0](0, 0), y = w[1](0, 0);
    return ProductWeights({std::sqrt(1 + 2 * y * y), std::sqrt(1 + 2 * x * x)});
  });
}

}  // namespace

TEST(ProductDual, Examples) {
  const ProductWeights p({2.0, 1.0});
  EXPECT_DOUBLE_EQ(product_dual_norm(scalars({6, 4}), p, abs_factors(2)), 4.0);
  EXPECT_EQ(product_dual_norm(scalars({0, 0}), p, abs_factors(2)), 0.0);
  const ProductWeights one({1.0});
  EXPECT_DOUBLE_EQ(product_dual_norm(scalars({-3}), one, abs_factors(1)), 3.0);
  EXPECT_THROW(product_dual_norm(scalars({1, 2, 3}), p, abs_factors(3)), std::invalid_argument);
}

TEST(ProductDual, DualityMapExamples) {
  const ProductWeights p({2.0, 1.0});
  const BlockVector l = scalars({6, 4});
  const Direction d = product_duality_map(l, p, abs_factors(2));
  ASSERT_TRUE(d.block.has_value());
  EXPECT_EQ(*d.block, 1u);
  EXPECT_DOUBLE_EQ(d.delta[0](0, 0), 0.0);
  EXPECT_DOUBLE_EQ(d.delta[1](0, 0), 4.0);
  EXPECT_DOUBLE_EQ(block_inner(l, d.delta), 16.0);

  const Direction z = product_duality_map(scalars({0, 0}), p, abs_factors(2));
  for (const auto& m : z.delta) EXPECT_TRUE(m.is_zero());

  const Direction tie = product_duality_map(scalars({2, 1}), p, abs_factors(2));
  EXPECT_EQ(*tie.block, 0u);
}

TEST(ProductDual, AxiomsAndBlockSparsityOnMatrixFactors) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pw(0.2, 5.0);
  for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
    std::vector<FactorGeometry> f(3, matrix_geometry(q));
    for (int t = 0; t < 200; ++t) {
      BlockVector l{oracle::random_matrix(rng, 2, 3), oracle::random_matrix(rng, 4, 2),
                    oracle::random_matrix(rng, 1, 5)};
      const ProductWeights p({pw(rng), pw(rng), pw(rng)});
      const Direction d = product_duality_map(l, p, f);
      const double dn = product_dual_norm(l, p, f);
      EXPECT_NEAR(product_norm(d.delta, p, f), dn, 1e-9 * std::max(1.0, dn));
      EXPECT_NEAR(block_inner(l, d.delta), dn * dn, 1e-9 * std::max(1.0, dn * dn));
      std::size_t nonzero = 0;
      for (const auto& m : d.delta) nonzero += m.is_zero() ? 0 : 1;
      EXPECT_EQ(nonzero, 1u);
    }
  }
}

TEST(RunDsgd, EuclideanQuadraticReachesMinimumInOneStep) {
  HalfSquare f;
  EuclideanStructure e;
  const DsgdResult r = run_dsgd(f, e, scalars({4, 3}), 1.0, 1);
  EXPECT_EQ(r.final_point[0](0, 0), 0.0);
  EXPECT_EQ(r.final_point[1](0, 0), 0.0);
  EXPECT_THROW(run_dsgd(f, e, scalars({1}), 2.0, 1), std::invalid_argument);
}

TEST(RunDsgd, TwoDimensionalExampleMovesOneCoordinatePerStep) {
  QuarticProduct f;
  const auto s = quartic_structure();
  const DsgdResult r = run_dsgd(f, s, scalars({1, 1}), 1.0, 200);
  ASSERT_EQ(r.records.size(), 200u);
  for (std::size_t t = 0; t + 1 < r.records.size(); ++t) {
    EXPECT_LE(r.records[t + 1].objective, r.records[t].objective + 1e-12);
    ASSERT_TRUE(r.records[t].block.has_value());
  }
  // Replay to confirm exactly one coordinate moves at every step.
  BlockVector w = scalars({1, 1});
  for (std::size_t t = 0; t < 50; ++t) {
    const Direction d = s.duality_map_at(w, f.derivative(w));
    const BlockVector before = w;
    add_scaled(w, d.delta, -1.0);
    int moved = 0;
    for (std::size_t i = 0; i < 2; ++i) moved += w[i](0, 0) != before[i](0, 0) ? 1 : 0;
    EXPECT_EQ(moved, 1);
  }
}

TEST(RunDsgd, BoundTExamples) {
  EXPECT_EQ(dsgd_bound_T(1.0, 1.0, 1.0, 0.1), 200u);
  EXPECT_EQ(dsgd_bound_T(0.0, 1.0, 1.0, 0.1), 0u);
  EXPECT_EQ(dsgd_bound_T(2.0, 1.0, 1.0, 1.0), 4u);
}

TEST(RunDsgd, CertificateHoldsAndBoundTReachesDelta) {
  QuarticProduct f;
  const auto s = quartic_structure();
  for (double eps : {0.5, 1.0, 1.5}) {
    const BlockVector w1 = scalars({1.5, -0.7});
    const double G = f.value(w1);
    const std::size_t T = dsgd_bound_T(G, eps, 1.0, 0.1);
    const DsgdResult r = run_dsgd(f, s, w1, eps, T);
    double min_sq = INFINITY, sum_sq = 0.0;
    for (const auto& rec : r.records) {
      min_sq = std::min(min_sq, rec.dual_grad_norm * rec.dual_grad_norm);
      sum_sq += rec.dual_grad_norm * rec.dual_grad_norm;
    }
    EXPECT_LE(std::sqrt(min_sq), 0.1);
    EXPECT_LE(min_sq, dsgd_certificate(G, eps, 1.0, T) + 1e-15);
    EXPECT_LE(sum_sq, 2 * G / (eps * (2 - eps)) + 1e-12);
  }
}

TEST(RunSdsgd, ZeroNoiseMatchesDeterministicDriver) {
  HalfSquare f;
  EuclideanStructure e;
  f.noise_ = 0.0;
  std::mt19937_64 rng(1);
  const BlockVector w1 = scalars({0.8, -1.2, 0.3});
  const SdsgdResult s = run_sdsgd(f, e, w1, 0.5, 1e-30, 20, rng);
  const DsgdResult d = run_dsgd(f, e, w1, 0.5, 20);
  EXPECT_FALSE(s.tau.has_value());
  ASSERT_GE(s.records.size(), d.records.size());
  for (std::size_t t = 0; t < d.records.size(); ++t) {
    EXPECT_EQ(s.records[t].objective, d.records[t].objective);
    EXPECT_EQ(s.records[t].dual_grad_norm, d.records[t].dual_grad_norm);
  }
}

TEST(RunSdsgd, StopsAtStartWhenGammaIsLarge) {
  HalfSquare f;
  EuclideanStructure e;
  std::mt19937_64 rng(1);
  const BlockVector w1 = scalars({1, 1});
  const SdsgdResult s = run_sdsgd(f, e, w1, 0.5, 2.5, 100, rng);
  ASSERT_TRUE(s.tau.has_value());
  EXPECT_EQ(*s.tau, 1u);
}

TEST(RunSdsgd, MeanStoppingTimeWithinBound) {
  // f = 0.5|w|^2 has L = 1 and G = f(w1); updates see N(0, s^2) noise per
  // coordinate so sigma^2 = d s^2.
  HalfSquare f;
  f.noise_ = 0.05;
  EuclideanStructure e;
  const BlockVector w1 = scalars({2, -1, 1});
  const double sigma2 = 3 * f.noise_ * f.noise_;
  const double alpha = 0.5;
  const double gamma = 60 * sigma2;
  const double bound = [&] {
    const double thr = 13 * sigma2 / ((1 - alpha) * (1 - alpha));
    return (4 * f.value(w1) + gamma) / (4 * alpha * (1 - alpha) * (gamma - thr));
  }();
  double sum = 0.0;
  for (int seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const SdsgdResult s = run_sdsgd(f, e, w1, 2 * alpha, gamma, 10000, rng);
    ASSERT_TRUE(s.tau.has_value());
    sum += static_cast<double>(*s.tau);
  }
  EXPECT_LE(sum / 200.0, bound);
}

TEST(BiasLemma, MonteCarloLowerBound) {
  // rho for a product of absolute-value factors, Rademacher perturbations of
  // known second moment.
  const ProductWeights p({1.5, 0.7, 2.0});
  const auto f = abs_factors(3);
  const BlockVector l = scalars({0.9, -0.4, 1.3});
  const double l2 = std::pow(product_dual_norm(l, p, f), 2);
  std::mt19937_64 rng(99);
  std::bernoulli_distribution coin(0.5);
  const double s = 0.6;
  const int N = 100000;
  std::vector<double> samples(N);
  double ed2 = 0.0;
  for (int i = 0; i < N; ++i) {
    BlockVector d = scalars({coin(rng) ? s : -s, coin(rng) ? s : -s, coin(rng) ? s : -s});
    ed2 += std::pow(product_dual_norm(d, p, f), 2);
    BlockVector sum = l;
    add_scaled(sum, d, 1.0);
    samples[i] = block_inner(l, product_duality_map(sum, p, f).delta);
  }
  ed2 /= N;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= N;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  const double se = std::sqrt(var / (N - 1) / N);
  for (double k : {0.1, 0.5, 1.0}) {
    const double lower = (1 - k / 2) * l2 - (1 + 1 / (2 * k)) * ed2;
    EXPECT_GE(mean, lower - 3 * se) << "k=" << k;
  }
}

TEST(ProductWeights, RejectsNonPositive) {
  EXPECT_THROW(ProductWeights({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(ProductWeights({-1.0}), std::invalid_argument);
}
