// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fednano/tensor.hpp"

namespace fednano {

using NodeId = std::size_t;

enum class OpKind {
  kInput,
  kConstant,
  kMatMul,
  kAdd,
  kScale,
  kRelu,
  kTanh,
  kConcatCols,
  kMeanRows,
  kSum,
  kSoftmaxCrossEntropy,
};

std::string_view op_name(OpKind kind);

/// Named tensors bound to a graph's input nodes for one forward pass.
using Bindings = std::map<std::string, Tensor, std::less<>>;

/// Static computation graph with reverse-mode differentiation.
///
/// Nodes are appended in topological order by construction: an op can only
/// reference nodes that already exist. Shapes are checked at forward time so
/// one graph serves any batch size. Inputs marked trainable (parameters) are
/// the roots of differentiation; backward fills gradients for every node that
/// depends on at least one of them.
///
/// A graph instance is single-flight: forward/backward on the same instance
/// must not run concurrently. Distinct instances are independent.
class Graph {
 public:
  /// Placeholder bound by name at forward time. Trainable inputs receive
  /// gradients.
  NodeId input(std::string name, bool trainable = false);
  NodeId parameter(std::string name) { return input(std::move(name), true); }
  NodeId constant(Tensor value, std::string name = {});

  NodeId matmul(NodeId a, NodeId b);
  /// a + b; b may be a (1,n) row broadcast over a's rows.
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId concat_cols(NodeId a, NodeId b);
  /// (B,n) -> (1,n) mean over the batch dimension.
  NodeId mean_rows(NodeId a);
  /// Sum of all elements -> (1,1).
  NodeId sum(NodeId a);
  /// Mean softmax cross-entropy of logits (B,C) against integer class labels
  /// given as a (B,1) tensor -> (1,1).
  NodeId softmax_cross_entropy(NodeId logits, NodeId labels);

  /// Evaluates every node. Deterministic: same bindings, same bits.
  void forward(const Bindings& inputs);

  /// Gradient of a scalar node with respect to every trainable input.
  void backward(NodeId loss);
  /// Backward pass seeded with an explicit upstream gradient for `root`
  /// (shape must equal the root's value).
  void backward(NodeId root, const Tensor& seed);

  const Tensor& value(NodeId id) const;
  /// Gradient slot of a node after backward. Zero-filled for nodes that
  /// depend on a trainable input but received no flow from the root.
  const Tensor& gradient(NodeId id) const;
  const Tensor& gradient(std::string_view input_name) const;

  /// Names of trainable inputs, in creation order.
  std::vector<std::string> trainable_names() const;
  NodeId find_input(std::string_view name) const;

  bool has_forward() const noexcept { return forward_done_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    std::string name;
    bool trainable = false;
    bool requires_grad = false;
    double factor = 1.0;
    Tensor value;
    Tensor grad;
    Tensor aux;  // softmax probabilities for the fused loss
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs);
  const Node& node(NodeId id) const;
  std::string describe(NodeId id) const;
  void evaluate(NodeId id);
  void propagate(NodeId id);

  std::vector<Node> nodes_;
  bool forward_done_ = false;
  bool backward_done_ = false;
};

/// Central-difference gradient (L(x+h) - L(x-h)) / 2h for every coordinate of
/// every trainable input of `graph`, evaluated at `inputs`. Used as a test
/// oracle; leaves the graph holding the forward state of the last probe.
std::map<std::string, Tensor, std::less<>> finite_difference_gradient(
    Graph& graph, const Bindings& inputs, NodeId loss, double h = 1e-5);

}  // namespace fednano
