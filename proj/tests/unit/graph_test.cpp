// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fednano/error.hpp"
#include "fednano/graph.hpp"
#include "fednano/rng.hpp"
#include "random_graphs.hpp"
#include "test_support.hpp"

namespace fednano {
namespace {

using testing::scaled_error;

TEST(GraphForward, ScalarMatmul) {
  Graph g;
  const NodeId a = g.input("a");
  const NodeId b = g.input("b");
  const NodeId c = g.matmul(a, b);
  g.forward({{"a", Tensor::scalar(2)}, {"b", Tensor::scalar(3)}});
  EXPECT_EQ(g.value(c), Tensor::scalar(6));
}

TEST(GraphForward, Relu) {
  Graph g;
  const NodeId y = g.relu(g.input("x"));
  g.forward({{"x", Tensor::matrix(1, 2, {1, -1})}});
  EXPECT_EQ(g.value(y), Tensor::matrix(1, 2, {1, 0}));
}

TEST(GraphForward, UniformSoftmaxCrossEntropy) {
  Graph g;
  const NodeId loss = g.softmax_cross_entropy(g.input("logits"), g.input("labels"));
  g.forward({{"logits", Tensor::matrix(1, 2, {0, 0})}, {"labels", Tensor::scalar(0)}});
  EXPECT_NEAR(g.value(loss).item(), std::log(2.0), 1e-15);
}

TEST(GraphForward, ShapeMismatchNamesNodeAndDims) {
  Graph g;
  const NodeId w = g.parameter("w");
  g.matmul(g.input("x"), w);
  try {
    g.forward({{"x", Tensor::zeros(2, 3)}, {"w", Tensor::zeros(4, 1)}});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("matmul"), std::string::npos) << what;
    EXPECT_NE(what.find("[2x3]"), std::string::npos) << what;
    EXPECT_NE(what.find("[4x1]"), std::string::npos) << what;
  }
}

TEST(GraphForward, UnboundInputIsAnError) {
  Graph g;
  g.relu(g.input("x"));
  EXPECT_THROW(g.forward({}), GraphError);
}

TEST(GraphForward, LabelsOutOfRangeRejected) {
  Graph g;
  g.softmax_cross_entropy(g.input("logits"), g.input("labels"));
  EXPECT_THROW(g.forward({{"logits", Tensor::zeros(1, 3)}, {"labels", Tensor::scalar(3)}}), InvalidArgument);
  EXPECT_THROW(g.forward({{"logits", Tensor::zeros(1, 3)}, {"labels", Tensor::scalar(-1)}}), InvalidArgument);
  EXPECT_THROW(g.forward({{"logits", Tensor::zeros(1, 3)}, {"labels", Tensor::scalar(0.5)}}), InvalidArgument);
}

TEST(GraphForward, Deterministic) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    testing::RandomGraph a = testing::make_random_graph(rng.next_u64());
    a.graph.forward(a.bindings);
    const Tensor first = a.graph.value(a.loss);
    a.graph.forward(a.bindings);
    EXPECT_EQ(a.graph.value(a.loss), first);
  }
}

TEST(GraphBackward, LinearDerivative) {
  Graph g;
  const NodeId w = g.parameter("w");
  const NodeId loss = g.matmul(w, g.input("x"));
  g.forward({{"w", Tensor::scalar(5)}, {"x", Tensor::scalar(3)}});
  g.backward(loss);
  EXPECT_EQ(g.gradient(w).item(), 3.0);
}

TEST(GraphBackward, PowerRule) {
  Graph g;
  const NodeId w = g.parameter("w");
  const NodeId loss = g.matmul(w, w);
  g.forward({{"w", Tensor::scalar(4)}});
  g.backward(loss);
  EXPECT_EQ(g.gradient("w").item(), 8.0);
}

TEST(GraphBackward, BeforeForwardIsAnError) {
  Graph g;
  const NodeId loss = g.sum(g.parameter("w"));
  EXPECT_THROW(g.backward(loss), GraphError);
}

TEST(GraphBackward, NonScalarLossIsAnError) {
  Graph g;
  const NodeId y = g.tanh(g.parameter("w"));
  g.forward({{"w", Tensor::zeros(2, 2)}});
  EXPECT_THROW(g.backward(y), GraphError);
}

TEST(GraphBackward, GradientSlotsOnlyForTrainableDependents) {
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("w");
  const NodeId fx = g.tanh(x);
  const NodeId loss = g.sum(g.matmul(fx, w));
  g.forward({{"x", Tensor::matrix(1, 2, {0.3, -0.2})}, {"w", Tensor::matrix(2, 1, {1, 2})}});
  g.backward(loss);
  EXPECT_FALSE(g.requires_grad(x));
  EXPECT_FALSE(g.requires_grad(fx));
  EXPECT_TRUE(g.requires_grad(w));
  EXPECT_THROW((void)g.gradient(x), GraphError);
  EXPECT_EQ(g.trainable_names(), std::vector<std::string>{"w"});
}

TEST(GraphBackward, RandomTwoLayerNetMatchesFiniteDifferences) {
  // 8 parameters: w1 (1x4), w2 (4x1), biases folded out.
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w1 = g.parameter("w1");
  const NodeId w2 = g.parameter("w2");
  const NodeId loss = g.sum(g.matmul(g.tanh(g.matmul(x, w1)), w2));
  Rng rng(3);
  Bindings b{{"x", testing::random_tensor(rng, 3, 1)},
             {"w1", testing::random_tensor(rng, 1, 4)},
             {"w2", testing::random_tensor(rng, 4, 1)}};
  g.forward(b);
  g.backward(loss);
  const Tensor gw1 = g.gradient(w1);
  const Tensor gw2 = g.gradient(w2);
  const auto fd = finite_difference_gradient(g, b, loss);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LT(scaled_error(gw1[i], fd.at("w1")[i]), 1e-4);
    EXPECT_LT(scaled_error(gw2[i], fd.at("w2")[i]), 1e-4);
  }
}

TEST(FiniteDifference, ExactOnQuadraticAndLinear) {
  Graph g;
  const NodeId w = g.parameter("w");
  const NodeId sq = g.matmul(w, w);
  auto fd = finite_difference_gradient(g, {{"w", Tensor::scalar(4)}}, sq, 1e-5);
  EXPECT_NEAR(fd.at("w").item(), 8.0, 1e-6);

  Graph h;
  const NodeId v = h.parameter("w");
  const NodeId lin = h.matmul(v, h.input("x"));
  fd = finite_difference_gradient(h, {{"w", Tensor::scalar(5)}, {"x", Tensor::scalar(3)}}, lin, 1e-5);
  EXPECT_NEAR(fd.at("w").item(), 3.0, 1e-9);
}

TEST(GraphProperty, RandomGraphsMatchFiniteDifferences) {
  Rng rng(2026);
  for (int trial = 0; trial < 120; ++trial) {
    const std::uint64_t seed = rng.next_u64();
    testing::RandomGraph rg = testing::make_random_graph(seed);
    rg.graph.forward(rg.bindings);
    rg.graph.backward(rg.loss);
    std::map<std::string, Tensor, std::less<>> analytic;
    for (const std::string& name : rg.graph.trainable_names()) analytic[name] = rg.graph.gradient(name);
    const auto fd = finite_difference_gradient(rg.graph, rg.bindings, rg.loss);
    for (const auto& [name, grad] : analytic) {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        ASSERT_LT(scaled_error(grad[i], fd.at(name)[i]), 1e-4)
            << "graph seed " << seed << " (" << rg.description << "), " << name << "[" << i << "]";
      }
    }
  }
}

TEST(GraphProperty, BackwardIsAdditiveOverLosses) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g;
    const NodeId x = g.input("x");
    const NodeId w = g.parameter("w");
    const NodeId h = g.tanh(g.matmul(x, w));
    const NodeId l1 = g.sum(h);
    const NodeId l2 = g.sum(g.relu(g.scale(h, -1.5)));
    const NodeId both = g.sum(g.concat_cols(l1, l2));
    const Bindings b{{"x", testing::random_tensor(rng, 3, 4, -2, 2)}, {"w", testing::random_tensor(rng, 4, 5, -2, 2)}};
    g.forward(b);
    g.backward(l1);
    const Tensor g1 = g.gradient(w);
    g.backward(l2);
    const Tensor g2 = g.gradient(w);
    g.backward(both);
    const Tensor g12 = g.gradient(w);
    for (std::size_t i = 0; i < g12.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-12);
  }
}

TEST(GraphProperty, SeededBackwardEqualsChainRule) {
  // backward(root, seed) must equal backward of sum(root * seed).
  Rng rng(5);
  Graph g;
  const NodeId x = g.input("x");
  const NodeId w = g.parameter("w");
  const NodeId y = g.tanh(g.matmul(x, w));
  const Tensor seed = testing::random_tensor(rng, 2, 3);
  const Bindings b{{"x", testing::random_tensor(rng, 2, 4)}, {"w", testing::random_tensor(rng, 4, 3)}};
  g.forward(b);
  g.backward(y, seed);
  const Tensor seeded = g.gradient(w);

  // d/dw sum(seed .* tanh(xw)) = x^T (seed .* (1 - y^2))
  const Tensor& yv = g.value(y);
  Tensor local = seed;
  for (std::size_t i = 0; i < local.size(); ++i) local[i] *= 1.0 - yv[i] * yv[i];
  const Tensor expected = matmul(b.at("x"), local, true, false);
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(seeded[i], expected[i], 1e-14);
  EXPECT_THROW(g.backward(y, Tensor::zeros(3, 2)), ShapeError);
}

}  // namespace
}  // namespace fednano
