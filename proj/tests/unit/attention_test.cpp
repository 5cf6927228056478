#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracle.hpp"
#include "gstam/attention.hpp"
#include "gstam/errors.hpp"

using namespace gstam;

namespace {

AttentionParams unit_params(AttentionVariant v, double w1, double b1, double w2, double b2) {
  AttentionParams p;
  p.variant = v;
  p.k1 = 1;
  p.k2 = 1;
  p.conv1_w = Parameter("c1w", Tensor(1, 1, w1));
  p.conv1_b = Parameter("c1b", Tensor(1, 1, b1));
  p.conv2_w = Parameter("c2w", Tensor(1, 1, w2));
  p.conv2_b = Parameter("c2b", Tensor(1, 1, b2));
  return p;
}

AttentionParams random_params(AttentionVariant v, std::size_t d, std::size_t k, std::mt19937_64& rng) {
  return make_attention(v, AttentionShape{d, 0, k, k}, rng);
}

}  // namespace

TEST(Attention, DefaultHidden) {
  EXPECT_EQ(default_hidden(40), 20u);
  EXPECT_EQ(default_hidden(20), 10u);
  EXPECT_EQ(default_hidden(3), 4u);
}

TEST(Attention, ParseVariant) {
  EXPECT_EQ(parse_attention_variant("stam"), AttentionVariant::stam);
  EXPECT_EQ(parse_attention_variant("PTAM"), AttentionVariant::ptam);
  EXPECT_THROW(parse_attention_variant("soft"), ConfigError);
}

TEST(Stam, ZeroSecondConvGivesHalf) {
  std::mt19937_64 rng(1);
  AttentionParams p = random_params(AttentionVariant::stam, 5, 3, rng);
  p.conv2_w.value.fill(0.0);
  p.conv2_b.value.fill(0.0);
  const auto a = stam_forward(oracle::random_tensor(5, 6, rng), p);
  for (double v : a.a.values()) EXPECT_EQ(v, 0.5);
}

TEST(Stam, RangeContract) {
  std::mt19937_64 rng(2);
  for (int n = 0; n < 200; ++n) {
    const auto a = stam_forward(oracle::random_tensor(8, 6, rng), random_params(AttentionVariant::stam, 8, 3, rng));
    ASSERT_EQ(a.a.size(), 6u);
    for (double v : a.a.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Stam, HandComposedExample) {
  const auto a = stam_forward(Tensor::matrix({{0, 10}}), unit_params(AttentionVariant::stam, 1, 0, 1, 0));
  EXPECT_DOUBLE_EQ(a.a[0], 0.5);
  EXPECT_NEAR(a.a[1], 0.9999546, 1e-7);
}

TEST(Stam, NotRenormalized) {
  const auto a = stam_forward(Tensor::matrix({{5, 5, 5}}), unit_params(AttentionVariant::stam, 1, 0, 1, 0));
  const double sum = std::accumulate(a.a.values().begin(), a.a.values().end(), 0.0);
  EXPECT_GT(sum, 2.9);
}

TEST(Stam, DimensionMismatch) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(stam_forward(Tensor(4, 6), random_params(AttentionVariant::stam, 5, 3, rng)), ConfigError);
  EXPECT_THROW(stam_forward(Tensor(5, 6), random_params(AttentionVariant::ptam, 5, 3, rng)), ConfigError);
}

TEST(Ptam, ZeroSecondConvGivesUniform) {
  std::mt19937_64 rng(4);
  AttentionParams p = random_params(AttentionVariant::ptam, 5, 3, rng);
  p.conv2_w.value.fill(0.0);
  const auto a = ptam_forward(oracle::random_tensor(5, 6, rng), p);
  for (double v : a.a.values()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(Ptam, SimplexContract) {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 200; ++n) {
    const auto a = ptam_forward(oracle::random_tensor(8, 6, rng, -4, 4), random_params(AttentionVariant::ptam, 8, 3, rng));
    double sum = 0.0;
    for (double v : a.a.values()) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Ptam, CraftedLogits) {
  // identity chain: scores equal the single feature row, relu keeps them
  const auto a = ptam_forward(Tensor::matrix({{1, 2, 0, 0, 0, 0}}), unit_params(AttentionVariant::ptam, 1, 0, 1, 0));
  const double z = std::exp(1.0) + std::exp(2.0) + 4.0;
  EXPECT_NEAR(a.a[0], std::exp(1.0) / z, 1e-15);
  EXPECT_NEAR(a.a[1], std::exp(2.0) / z, 1e-15);
  for (std::size_t t = 2; t < 6; ++t) EXPECT_NEAR(a.a[t], 1.0 / z, 1e-15);
}

TEST(Ptam, SecondReluClipsNegativeScores) {
  const auto a = ptam_forward(Tensor::matrix({{1, 2}}), unit_params(AttentionVariant::ptam, 1, 0, -1, 0));
  EXPECT_DOUBLE_EQ(a.a[0], 0.5);
  EXPECT_DOUBLE_EQ(a.a[1], 0.5);
}

TEST(Aggregate, Examples) {
  EXPECT_EQ(aggregate(Tensor::identity(2), Tensor::vector({1, 0})), Tensor::vector({1, 0}));
  EXPECT_EQ(aggregate(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector(2)), Tensor::vector(2));
  EXPECT_EQ(aggregate(Tensor::matrix({{1, 2}, {3, 4}}), Tensor::vector({0.5, 0.5})), Tensor::vector({1.5, 3.5}));
  EXPECT_THROW(aggregate(Tensor(2, 3), Tensor::vector(2)), DimensionError);
}

TEST(Aggregate, LinearInWeights) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> coef(-3, 3);
  for (int n = 0; n < 100; ++n) {
    const Tensor f = oracle::random_tensor(7, 6, rng);
    const Tensor a = oracle::random_tensor(6, 1, rng);
    const Tensor b = oracle::random_tensor(6, 1, rng);
    const double alpha = coef(rng), beta = coef(rng);
    Tensor mix(6, 1);
    for (std::size_t t = 0; t < 6; ++t) mix[t] = alpha * a[t] + beta * b[t];
    const Tensor lhs = aggregate(f, mix);
    const Tensor fa = aggregate(f, a), fb = aggregate(f, b);
    for (std::size_t r = 0; r < 7; ++r) EXPECT_NEAR(lhs[r], alpha * fa[r] + beta * fb[r], 1e-10);
  }
}

TEST(Stam, PermutationEquivariantWithUnitKernels) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 50; ++n) {
    const AttentionParams p = random_params(AttentionVariant::stam, 6, 1, rng);
    const Tensor f = oracle::random_tensor(6, 8, rng);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor g(6, 8);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t t = 0; t < 8; ++t) g(r, t) = f(r, perm[t]);
    const auto a = stam_forward(f, p);
    const auto b = stam_forward(g, p);
    for (std::size_t t = 0; t < 8; ++t) EXPECT_EQ(b.a[t], a.a[perm[t]]);
  }
}

TEST(Attention, GraphForwardMatchesPlain) {
  std::mt19937_64 rng(8);
  for (AttentionVariant v : {AttentionVariant::stam, AttentionVariant::ptam}) {
    const AttentionParams p = random_params(v, 5, 3, rng);
    const Tensor f = oracle::random_tensor(5, 6, rng);
    Graph g;
    const Tensor graph = attention_forward(g, g.constant(f), p, false).value();
    EXPECT_EQ(graph, attention_forward(f, p).a);
  }
}

TEST(Attention, InitializationBounds) {
  std::mt19937_64 rng(9);
  const AttentionParams p = random_params(AttentionVariant::stam, 10, 3, rng);
  EXPECT_EQ(p.hidden(), 5u);
  EXPECT_EQ(p.feature_dim(), 10u);
  const double b1 = 1.0 / std::sqrt(30.0);
  for (double v : p.conv1_w.value.values()) EXPECT_LE(std::abs(v), b1);
  for (double v : p.conv1_b.value.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(p.conv2_b.value[0], 0.0);
}
