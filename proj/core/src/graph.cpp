// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/graph.hpp"

#include <algorithm>
#include <cmath>

#include "fednano/error.hpp"

namespace fednano {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kSum: return "sum";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "?";
}

NodeId Graph::push(OpKind kind, std::vector<NodeId> inputs) {
  bool requires_grad = false;
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw GraphError("node references unknown input id " + std::to_string(in));
    requires_grad = requires_grad || nodes_[in].requires_grad;
  }
  Node n;
  n.kind = kind;
  n.inputs = std::move(inputs);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  forward_done_ = false;
  return nodes_.size() - 1;
}

NodeId Graph::input(std::string name, bool trainable) {
  if (name.empty()) throw GraphError("graph inputs must be named");
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kInput && n.name == name) {
      throw GraphError("duplicate graph input '" + name + "'");
    }
  }
  NodeId id = push(OpKind::kInput, {});
  nodes_[id].name = std::move(name);
  nodes_[id].trainable = trainable;
  nodes_[id].requires_grad = trainable;
  return id;
}

NodeId Graph::constant(Tensor value, std::string name) {
  NodeId id = push(OpKind::kConstant, {});
  nodes_[id].value = std::move(value);
  nodes_[id].name = std::move(name);
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) { return push(OpKind::kMatMul, {a, b}); }
NodeId Graph::add(NodeId a, NodeId b) { return push(OpKind::kAdd, {a, b}); }
NodeId Graph::relu(NodeId a) { return push(OpKind::kRelu, {a}); }
NodeId Graph::tanh(NodeId a) { return push(OpKind::kTanh, {a}); }
NodeId Graph::concat_cols(NodeId a, NodeId b) { return push(OpKind::kConcatCols, {a, b}); }
NodeId Graph::mean_rows(NodeId a) { return push(OpKind::kMeanRows, {a}); }
NodeId Graph::sum(NodeId a) { return push(OpKind::kSum, {a}); }

NodeId Graph::scale(NodeId a, double factor) {
  NodeId id = push(OpKind::kScale, {a});
  nodes_[id].factor = factor;
  return id;
}

NodeId Graph::softmax_cross_entropy(NodeId logits, NodeId labels) {
  if (labels < nodes_.size() && nodes_[labels].requires_grad) {
    throw GraphError("softmax_cross_entropy: labels must not be trainable");
  }
  return push(OpKind::kSoftmaxCrossEntropy, {logits, labels});
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id >= nodes_.size()) throw GraphError("unknown node id " + std::to_string(id));
  return nodes_[id];
}

std::string Graph::describe(NodeId id) const {
  const Node& n = nodes_[id];
  std::string s = "node " + std::to_string(id) + " (" + std::string(op_name(n.kind));
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

NodeId Graph::find_input(std::string_view name) const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].kind == OpKind::kInput && nodes_[id].name == name) return id;
  }
  throw GraphError("graph has no input named '" + std::string(name) + "'");
}

std::vector<std::string> Graph::trainable_names() const {
  std::vector<std::string> names;
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kInput && n.trainable) names.push_back(n.name);
  }
  return names;
}

void Graph::forward(const Bindings& inputs) {
  forward_done_ = false;
  backward_done_ = false;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.kind == OpKind::kInput) {
      auto it = inputs.find(n.name);
      if (it == inputs.end()) throw GraphError(describe(id) + ": input not bound");
      if (it->second.rank() != 2) {
        throw ShapeError(describe(id) + ": expected rank-2 tensor, got " + it->second.shape_string());
      }
      n.value = it->second;
    } else if (n.kind != OpKind::kConstant) {
      evaluate(id);
    }
  }
  forward_done_ = true;
}

void Graph::evaluate(NodeId id) {
  Node& n = nodes_[id];
  const Tensor& a = nodes_[n.inputs[0]].value;
  auto fail = [&](const std::string& what) {
    std::string dims;
    for (NodeId in : n.inputs) dims += " " + nodes_[in].value.shape_string();
    throw ShapeError(describe(id) + ": " + what + "; input dims" + dims);
  };
  switch (n.kind) {
    case OpKind::kMatMul: {
      const Tensor& b = nodes_[n.inputs[1]].value;
      if (a.cols() != b.rows()) fail("inner dims do not match");
      n.value = fednano::matmul(a, b);
      break;
    }
    case OpKind::kAdd: {
      const Tensor& b = nodes_[n.inputs[1]].value;
      if (b.cols() != a.cols() || (b.rows() != a.rows() && b.rows() != 1)) {
        fail("operands must match or broadcast a single row");
      }
      n.value = add_broadcast(a, b);
      break;
    }
    case OpKind::kScale: {
      n.value = a;
      for (double& v : n.value.values()) v *= n.factor;
      break;
    }
    case OpKind::kRelu: {
      n.value = a;
      for (double& v : n.value.values()) v = v > 0.0 ? v : 0.0;
      break;
    }
    case OpKind::kTanh:
      n.value = fednano::tanh(a);
      break;
    case OpKind::kConcatCols: {
      const Tensor& b = nodes_[n.inputs[1]].value;
      if (a.rows() != b.rows()) fail("row counts differ");
      n.value = fednano::concat_cols(a, b);
      break;
    }
    case OpKind::kMeanRows: {
      const std::size_t rows = a.rows();
      const std::size_t cols = a.cols();
      n.value = Tensor::zeros(1, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) n.value(0, c) += a(r, c);
      }
      for (double& v : n.value.values()) v /= static_cast<double>(rows);
      break;
    }
    case OpKind::kSum: {
      double s = 0.0;
      for (double v : a.values()) s += v;
      n.value = Tensor::scalar(s);
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Tensor& labels = nodes_[n.inputs[1]].value;
      const std::size_t batch = a.rows();
      const std::size_t classes = a.cols();
      if (labels.rows() != batch || labels.cols() != 1) fail("labels must be (batch,1)");
      n.aux = Tensor::zeros(batch, classes);
      double total = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double label = labels(r, 0);
        if (!(label >= 0.0) || label >= static_cast<double>(classes) || label != std::floor(label)) {
          throw InvalidArgument(describe(id) + ": label " + std::to_string(label) + " at row " +
                                std::to_string(r) + " outside [0, " + std::to_string(classes) + ")");
        }
        double max_logit = a(r, 0);
        for (std::size_t c = 1; c < classes; ++c) max_logit = std::max(max_logit, a(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          const double e = std::exp(a(r, c) - max_logit);
          n.aux(r, c) = e;
          z += e;
        }
        for (std::size_t c = 0; c < classes; ++c) n.aux(r, c) /= z;
        const auto target = static_cast<std::size_t>(label);
        total += (max_logit + std::log(z)) - a(r, target);
      }
      n.value = Tensor::scalar(total / static_cast<double>(batch));
      break;
    }
    case OpKind::kInput:
    case OpKind::kConstant:
      break;
  }
}

void Graph::backward(NodeId loss) {
  if (!forward_done_) throw GraphError("backward called before forward");
  const Node& n = node(loss);
  if (n.value.size() != 1) {
    throw GraphError(describe(loss) + ": backward needs a scalar loss, got " + n.value.shape_string());
  }
  backward(loss, Tensor::filled(1, 1, 1.0));
}

void Graph::backward(NodeId root, const Tensor& seed) {
  if (!forward_done_) throw GraphError("backward called before forward");
  const Node& r = node(root);
  if (!seed.same_shape(r.value)) {
    throw ShapeError(describe(root) + ": seed gradient " + seed.shape_string() +
                     " does not match value " + r.value.shape_string());
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Tensor(n.value.shape());
    } else {
      n.grad = Tensor();
    }
  }
  if (!r.requires_grad) {
    backward_done_ = true;
    return;
  }
  nodes_[root].grad = seed;
  for (NodeId id = root + 1; id-- > 0;) {
    if (nodes_[id].requires_grad) propagate(id);
  }
  backward_done_ = true;
}

void Graph::propagate(NodeId id) {
  Node& n = nodes_[id];
  if (n.inputs.empty()) return;
  const Tensor& g = n.grad;
  auto accumulate = [&](NodeId target, const Tensor& delta) {
    Node& t = nodes_[target];
    if (!t.requires_grad) return;
    std::span<double> tv = t.grad.values();
    std::span<const double> dv = delta.values();
    for (std::size_t i = 0; i < tv.size(); ++i) tv[i] += dv[i];
  };
  Node& a = nodes_[n.inputs[0]];
  switch (n.kind) {
    case OpKind::kMatMul: {
      Node& b = nodes_[n.inputs[1]];
      if (a.requires_grad) accumulate(n.inputs[0], fednano::matmul(g, b.value, false, true));
      if (b.requires_grad) accumulate(n.inputs[1], fednano::matmul(a.value, g, true, false));
      break;
    }
    case OpKind::kAdd: {
      Node& b = nodes_[n.inputs[1]];
      accumulate(n.inputs[0], g);
      if (b.requires_grad) {
        if (b.value.rows() == g.rows()) {
          accumulate(n.inputs[1], g);
        } else {
          Tensor reduced = Tensor::zeros(1, g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) reduced(0, c) += g(r, c);
          }
          accumulate(n.inputs[1], reduced);
        }
      }
      break;
    }
    case OpKind::kScale: {
      Tensor d = g;
      for (double& v : d.values()) v *= n.factor;
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kRelu: {
      Tensor d = g;
      std::span<const double> x = a.value.values();
      std::span<double> dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = x[i] > 0.0 ? dv[i] : 0.0;
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kTanh: {
      Tensor d = g;
      std::span<const double> y = n.value.values();
      std::span<double> dv = d.values();
      for (std::size_t i = 0; i < dv.size(); ++i) dv[i] *= 1.0 - y[i] * y[i];
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kConcatCols: {
      Node& b = nodes_[n.inputs[1]];
      const std::size_t ca = a.value.cols();
      const std::size_t cb = b.value.cols();
      const std::size_t rows = g.rows();
      if (a.requires_grad) {
        Tensor d = Tensor::zeros(rows, ca);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < ca; ++c) d(r, c) = g(r, c);
        accumulate(n.inputs[0], d);
      }
      if (b.requires_grad) {
        Tensor d = Tensor::zeros(rows, cb);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cb; ++c) d(r, c) = g(r, ca + c);
        accumulate(n.inputs[1], d);
      }
      break;
    }
    case OpKind::kMeanRows: {
      const std::size_t rows = a.value.rows();
      Tensor d(a.value.shape());
      const double inv = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = g(0, c) * inv;
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kSum: {
      Tensor d(a.value.shape());
      for (double& v : d.values()) v = g[0];
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kSoftmaxCrossEntropy: {
      const Tensor& labels = nodes_[n.inputs[1]].value;
      const std::size_t batch = n.aux.rows();
      const double coeff = g[0] / static_cast<double>(batch);
      Tensor d = n.aux;
      for (std::size_t r = 0; r < batch; ++r) {
        d(r, static_cast<std::size_t>(labels(r, 0))) -= 1.0;
      }
      for (double& v : d.values()) v *= coeff;
      accumulate(n.inputs[0], d);
      break;
    }
    case OpKind::kInput:
    case OpKind::kConstant:
      break;
  }
}

const Tensor& Graph::value(NodeId id) const {
  const Node& n = node(id);
  if (!forward_done_ && n.kind != OpKind::kConstant) {
    throw GraphError(describe(id) + ": value requested before forward");
  }
  return n.value;
}

const Tensor& Graph::gradient(NodeId id) const {
  const Node& n = node(id);
  if (!backward_done_) throw GraphError(describe(id) + ": gradient requested before backward");
  if (!n.requires_grad) throw GraphError(describe(id) + ": node does not depend on a trainable input");
  return n.grad;
}

const Tensor& Graph::gradient(std::string_view input_name) const {
  return gradient(find_input(input_name));
}

std::map<std::string, Tensor, std::less<>> finite_difference_gradient(Graph& graph,
                                                                      const Bindings& inputs,
                                                                      NodeId loss, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite difference step must be positive");
  std::map<std::string, Tensor, std::less<>> grads;
  Bindings probe = inputs;
  auto eval = [&]() {
    graph.forward(probe);
    const Tensor& v = graph.value(loss);
    if (v.size() != 1) throw GraphError("finite differences need a scalar loss");
    return v[0];
  };
  for (const std::string& name : graph.trainable_names()) {
    auto it = probe.find(name);
    if (it == probe.end()) throw GraphError("input '" + name + "' not bound");
    Tensor grad(it->second.shape());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double original = it->second[i];
      it->second[i] = original + h;
      const double up = eval();
      it->second[i] = original - h;
      const double down = eval();
      it->second[i] = original;
      grad[i] = (up - down) / (2.0 * h);
    }
    grads.emplace(name, std::move(grad));
  }
  return grads;
}

}  // namespace fednano
