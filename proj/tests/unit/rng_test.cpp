// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fednano/error.hpp"
#include "fednano/rng.hpp"

namespace fednano {
namespace {

TEST(DeriveSeed, DependsOnEveryCoordinate) {
  const std::uint64_t base = derive_seed(1, "sampler", {2, 3});
  EXPECT_EQ(base, derive_seed(1, "sampler", {2, 3}));
  EXPECT_NE(base, derive_seed(2, "sampler", {2, 3}));
  EXPECT_NE(base, derive_seed(1, "sample", {2, 3}));
  EXPECT_NE(base, derive_seed(1, "sampler", {3, 2}));
  EXPECT_NE(base, derive_seed(1, "sampler", {2}));
}

TEST(Rng, StreamIsReproducible) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(1);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(2);
  const int n = 50000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, GammaMeanEqualsShape) {
  Rng rng(3);
  for (double shape : {0.1, 0.5, 1.0, 4.0}) {
    const int n = 40000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      ASSERT_GE(g, 0.0);
      s += g;
    }
    EXPECT_NEAR(s / n, shape, 0.05 * std::max(1.0, shape)) << "shape " << shape;
  }
  EXPECT_THROW((void)rng.gamma(0.0), InvalidArgument);
}

TEST(Rng, BelowIsUnbiasedAndInRange) {
  Rng rng(4);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::size_t k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, CategoricalFollowsWeights) {
  Rng rng(5);
  const std::vector<double> w{1.0, 0.0, 3.0};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 40000; ++i) ++counts[rng.categorical(w)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / 40000.0, 0.25, 0.01);
}

TEST(Rng, DirichletOnSimplex) {
  Rng rng(6);
  for (double alpha : {0.01, 0.1, 1.0, 100.0}) {
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = rng.dirichlet(alpha, 5);
      ASSERT_EQ(p.size(), 5u);
      for (double v : p) ASSERT_GE(v, 0.0);
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    }
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(7);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

}  // namespace
}  // namespace fednano
