// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/model.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "fednano/error.hpp"
#include "fednano/rng.hpp"

namespace fednano {

namespace {

Tensor uniform_fan_in(std::size_t rows, std::size_t cols, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

std::size_t count(const std::vector<const Tensor*>& tensors) {
  std::size_t n = 0;
  for (const Tensor* t : tensors) n += t->size();
  return n;
}

std::uint64_t checksum_all(const std::vector<const Tensor*>& tensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Tensor* t : tensors) h = checksum(*t, h);
  return h;
}

std::atomic<std::uint64_t> next_batch_id{1};

struct AdapterNodes {
  NodeId down;
  NodeId up;
};

// x + scale * (x * down) * up, in that association order everywhere.
NodeId build_adapter(Graph& g, NodeId x, const std::string& prefix, double scale,
                     AdapterNodes* nodes) {
  nodes->down = g.parameter(prefix + ".down");
  nodes->up = g.parameter(prefix + ".up");
  NodeId low = g.matmul(x, nodes->down);
  NodeId delta = g.scale(g.matmul(low, nodes->up), scale);
  return g.add(x, delta);
}

NodeId build_core(Graph& g, NodeId activation, const FrozenCore& core) {
  NodeId w1 = g.constant(core.hidden_weight, "core.hidden_weight");
  NodeId b1 = g.constant(core.hidden_bias, "core.hidden_bias");
  NodeId w2 = g.constant(core.output_weight, "core.output_weight");
  NodeId b2 = g.constant(core.output_bias, "core.output_bias");
  NodeId hidden = g.relu(g.add(g.matmul(activation, w1), b1));
  return g.add(g.matmul(hidden, w2), b2);
}

void bind_adapter(Bindings& b, const std::string& prefix, const NanoAdapter& a) {
  b.insert_or_assign(prefix + ".down", a.down);
  b.insert_or_assign(prefix + ".up", a.up);
}

void append(std::vector<double>& out, const Tensor& t) {
  out.insert(out.end(), t.values().begin(), t.values().end());
}

std::vector<double> collect_gradients(const Graph& g, const AdapterLayout& layout) {
  std::vector<double> flat;
  flat.reserve(layout.flat_size());
  if (layout.image_enabled) {
    append(flat, g.gradient("image.down"));
    append(flat, g.gradient("image.up"));
  }
  if (layout.text_enabled) {
    append(flat, g.gradient("text.down"));
    append(flat, g.gradient("text.up"));
  }
  return flat;
}

Tensor core_logits(const Tensor& activation, const FrozenCore& core) {
  Tensor hidden = add_broadcast(matmul(activation, core.hidden_weight), core.hidden_bias);
  for (double& v : hidden.values()) v = v > 0.0 ? v : 0.0;
  return add_broadcast(matmul(hidden, core.output_weight), core.output_bias);
}

}  // namespace

void ModelDims::validate() const {
  if (d_img == 0 || d_emb == 0 || d_model == 0 || d_hidden == 0 || n_answers == 0 || vocab == 0) {
    throw InvalidArgument("all model dims must be positive");
  }
}

std::vector<const Tensor*> FrozenPipeline::tensors() const {
  return {&image_weight, &image_bias, &token_embedding, &connector_weight, &connector_bias};
}
std::size_t FrozenPipeline::parameter_count() const { return count(tensors()); }
std::uint64_t FrozenPipeline::checksum() const { return checksum_all(tensors()); }

std::vector<const Tensor*> FrozenCore::tensors() const {
  return {&hidden_weight, &hidden_bias, &output_weight, &output_bias};
}
std::size_t FrozenCore::parameter_count() const { return count(tensors()); }
std::uint64_t FrozenCore::checksum() const { return checksum_all(tensors()); }

FrozenModel init_frozen(std::uint64_t seed, const ModelDims& dims) {
  dims.validate();
  auto stream = [&](std::uint64_t index) { return derive_seed(seed, "frozen", {index}); };
  FrozenModel m;
  m.dims = dims;
  m.pipeline.image_weight = uniform_fan_in(dims.d_img, dims.d_emb, dims.d_img, stream(0));
  m.pipeline.image_bias = uniform_fan_in(1, dims.d_emb, dims.d_img, stream(1));
  m.pipeline.token_embedding = uniform_fan_in(dims.vocab, dims.d_emb, dims.vocab, stream(2));
  m.pipeline.connector_weight = uniform_fan_in(dims.d_emb, dims.d_model, dims.d_emb, stream(3));
  m.pipeline.connector_bias = uniform_fan_in(1, dims.d_model, dims.d_emb, stream(4));
  const std::size_t core_in = 2 * dims.d_model;
  m.core.hidden_weight = uniform_fan_in(core_in, dims.d_hidden, core_in, stream(5));
  m.core.hidden_bias = uniform_fan_in(1, dims.d_hidden, core_in, stream(6));
  m.core.output_weight = uniform_fan_in(dims.d_hidden, dims.n_answers, dims.d_hidden, stream(7));
  m.core.output_bias = uniform_fan_in(1, dims.n_answers, dims.d_hidden, stream(8));
  return m;
}

std::size_t frozen_pipeline_parameter_count(const ModelDims& d) {
  return d.d_img * d.d_emb + d.d_emb + d.vocab * d.d_emb + d.d_emb * d.d_model + d.d_model;
}

std::size_t frozen_core_parameter_count(const ModelDims& d) {
  return 2 * d.d_model * d.d_hidden + d.d_hidden + d.d_hidden * d.n_answers + d.n_answers;
}

Tensor NanoAdapter::apply(const Tensor& x) const {
  Tensor delta = matmul(matmul(x, down), up);
  for (double& v : delta.values()) v *= scale;
  return add_broadcast(x, delta);
}

void AdapterLayout::validate() const {
  if (d_model == 0) throw InvalidArgument("adapter d_model must be positive");
  if (rank < 1 || rank > d_model) {
    throw InvalidArgument("adapter rank " + std::to_string(rank) + " outside [1, " +
                          std::to_string(d_model) + "]");
  }
  if (!image_enabled && !text_enabled) throw InvalidArgument("at least one adapter must be enabled");
}

std::vector<double> AdapterParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(flat_size());
  if (layout.image_enabled) {
    append(flat, image.down);
    append(flat, image.up);
  }
  if (layout.text_enabled) {
    append(flat, text.down);
    append(flat, text.up);
  }
  return flat;
}

void AdapterParams::unflatten(std::span<const double> flat) {
  if (flat.size() != flat_size()) {
    throw ShapeError("adapter vector has " + std::to_string(flat.size()) + " values, layout needs " +
                     std::to_string(flat_size()));
  }
  std::size_t offset = 0;
  auto take = [&](Tensor& t) {
    for (double& v : t.values()) v = flat[offset++];
  };
  if (layout.image_enabled) {
    take(image.down);
    take(image.up);
  }
  if (layout.text_enabled) {
    take(text.down);
    take(text.up);
  }
}

std::uint64_t AdapterParams::checksum() const {
  const std::vector<double> flat = flatten();
  return fednano::checksum(std::span<const double>(flat));
}

AdapterParams init_adapters(const AdapterLayout& layout, std::uint64_t seed) {
  layout.validate();
  AdapterParams p;
  p.layout = layout;
  const std::size_t d = layout.d_model;
  const std::size_t r = layout.rank;
  p.image.down = uniform_fan_in(d, r, d, derive_seed(seed, "adapter", {0}));
  p.image.up = Tensor::zeros(r, d);
  p.text.down = uniform_fan_in(d, r, d, derive_seed(seed, "adapter", {1}));
  p.text.up = Tensor::zeros(r, d);
  if (!layout.image_enabled) p.image.down = Tensor::zeros(d, r);
  if (!layout.text_enabled) p.text.down = Tensor::zeros(d, r);
  return p;
}

AdapterParams adapters_from_flat(const AdapterLayout& layout, std::span<const double> flat) {
  layout.validate();
  AdapterParams p;
  p.layout = layout;
  p.image.down = Tensor::zeros(layout.d_model, layout.rank);
  p.image.up = Tensor::zeros(layout.rank, layout.d_model);
  p.text = p.image;
  p.unflatten(flat);
  return p;
}

EncodedBatch encode_samples(const FrozenPipeline& pipeline, const ModelDims& dims,
                            std::span<const Sample> samples) {
  if (samples.empty()) throw InvalidArgument("cannot encode an empty batch");
  const std::size_t n = samples.size();
  Tensor images = Tensor::zeros(n, dims.d_img);
  Tensor pooled = Tensor::zeros(n, dims.d_emb);
  EncodedBatch out;
  out.labels = Tensor::zeros(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = samples[i];
    if (s.image_features.size() != dims.d_img) {
      throw ShapeError("sample " + std::to_string(s.id) + " has " +
                       std::to_string(s.image_features.size()) + " image features, model expects " +
                       std::to_string(dims.d_img));
    }
    if (s.question_tokens.empty()) {
      throw InvalidArgument("sample " + std::to_string(s.id) + " has no question tokens");
    }
    if (s.answer >= dims.n_answers) {
      throw InvalidArgument("sample " + std::to_string(s.id) + " answer out of range");
    }
    for (std::size_t c = 0; c < dims.d_img; ++c) images(i, c) = s.image_features[c];
    for (std::uint32_t tok : s.question_tokens) {
      if (tok >= dims.vocab) {
        throw InvalidArgument("sample " + std::to_string(s.id) + " token " + std::to_string(tok) +
                              " outside vocabulary");
      }
      for (std::size_t c = 0; c < dims.d_emb; ++c) pooled(i, c) += pipeline.token_embedding(tok, c);
    }
    const double inv = 1.0 / static_cast<double>(s.question_tokens.size());
    for (std::size_t c = 0; c < dims.d_emb; ++c) pooled(i, c) *= inv;
    out.labels(i, 0) = static_cast<double>(s.answer);
  }
  Tensor image_emb = fednano::tanh(add_broadcast(matmul(images, pipeline.image_weight), pipeline.image_bias));
  out.image = add_broadcast(matmul(image_emb, pipeline.connector_weight), pipeline.connector_bias);
  out.text = add_broadcast(matmul(pooled, pipeline.connector_weight), pipeline.connector_bias);
  return out;
}

EncodedBatch gather(const EncodedBatch& all, std::span<const std::size_t> indices) {
  if (indices.empty()) throw InvalidArgument("cannot gather an empty batch");
  const std::size_t d = all.image.cols();
  EncodedBatch out;
  out.image = Tensor::zeros(indices.size(), d);
  out.text = Tensor::zeros(indices.size(), d);
  out.labels = Tensor::zeros(indices.size(), 1);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= all.size()) throw InvalidArgument("gather index out of range");
    for (std::size_t c = 0; c < d; ++c) {
      out.image(i, c) = all.image(src, c);
      out.text(i, c) = all.text(src, c);
    }
    out.labels(i, 0) = all.labels(src, 0);
  }
  return out;
}

ClientModel::ClientModel(const AdapterLayout& layout) : layout_(layout) {
  layout_.validate();
}

BoundaryActivation ClientModel::forward(const EncodedBatch& batch, const AdapterParams& adapters) {
  if (batch.size() == 0) throw InvalidArgument("client forward needs a nonempty batch");
  if (!(adapters.layout == layout_)) throw ShapeError("adapter layout differs from the client model's");
  if (batch.image.cols() != layout_.d_model || batch.text.cols() != layout_.d_model) {
    throw ShapeError("encoded features have width " + std::to_string(batch.image.cols()) +
                     ", adapters expect d_model " + std::to_string(layout_.d_model));
  }
  if (graph_.node_count() == 0) {
    NodeId image = graph_.input("image");
    NodeId text = graph_.input("text");
    AdapterNodes nodes{};
    if (layout_.image_enabled) image = build_adapter(graph_, image, "image", adapters.image.scale, &nodes);
    if (layout_.text_enabled) text = build_adapter(graph_, text, "text", adapters.text.scale, &nodes);
    activation_ = graph_.concat_cols(image, text);
  }
  Bindings b;
  b.emplace("image", batch.image);
  b.emplace("text", batch.text);
  if (layout_.image_enabled) bind_adapter(b, "image", adapters.image);
  if (layout_.text_enabled) bind_adapter(b, "text", adapters.text);
  graph_.forward(b);
  ++passes_.forward;
  cached_ = true;
  cached_batch_ = next_batch_id.fetch_add(1, std::memory_order_relaxed);
  return BoundaryActivation{graph_.value(activation_), cached_batch_};
}

std::vector<double> ClientModel::backward(const BoundaryGradient& gradient) {
  if (!cached_) throw GraphError("client backward without a cached forward pass");
  if (gradient.batch_id != cached_batch_) {
    throw GraphError("boundary gradient for batch " + std::to_string(gradient.batch_id) +
                     " does not match cached batch " + std::to_string(cached_batch_));
  }
  graph_.backward(activation_, gradient.values);
  ++passes_.backward;
  cached_ = false;
  return collect_gradients(graph_, layout_);
}

ServerModel::ServerModel(const FrozenCore& core, const ModelDims& dims, double loss_scale)
    : dims_(dims) {
  if (!(loss_scale > 0.0)) throw InvalidArgument("loss scale must be positive");
  NodeId activation = graph_.input("activation", true);
  logits_ = build_core(graph_, activation, core);
  NodeId labels = graph_.input("labels");
  loss_ = graph_.softmax_cross_entropy(logits_, labels);
  if (loss_scale != 1.0) loss_ = graph_.scale(loss_, loss_scale);
}

ServerStep ServerModel::forward_loss(const BoundaryActivation& activation, const Tensor& labels) {
  if (activation.values.rows() != labels.rows()) {
    throw ShapeError("activation batch " + std::to_string(activation.values.rows()) +
                     " differs from label count " + std::to_string(labels.rows()));
  }
  if (activation.values.cols() != 2 * dims_.d_model) {
    throw ShapeError("activation width " + std::to_string(activation.values.cols()) +
                     " differs from 2*d_model " + std::to_string(2 * dims_.d_model));
  }
  Bindings b;
  b.emplace("activation", activation.values);
  b.emplace("labels", labels);
  graph_.forward(b);
  graph_.backward(loss_);
  ServerStep step;
  step.loss = graph_.value(loss_).item();
  step.logits = graph_.value(logits_);
  step.gradient = BoundaryGradient{graph_.gradient("activation"), activation.batch_id};
  return step;
}

StitchedResult stitched_loss_and_gradient(const EncodedBatch& batch, const AdapterParams& adapters,
                                          const FrozenCore& core, const ModelDims& dims,
                                          double loss_scale) {
  const AdapterLayout& layout = adapters.layout;
  layout.validate();
  if (layout.d_model != dims.d_model) throw ShapeError("adapter d_model differs from model dims");
  Graph g;
  NodeId image = g.input("image");
  NodeId text = g.input("text");
  AdapterNodes nodes{};
  if (layout.image_enabled) image = build_adapter(g, image, "image", adapters.image.scale, &nodes);
  if (layout.text_enabled) text = build_adapter(g, text, "text", adapters.text.scale, &nodes);
  NodeId logits = build_core(g, g.concat_cols(image, text), core);
  NodeId loss = g.softmax_cross_entropy(logits, g.input("labels"));
  if (loss_scale != 1.0) loss = g.scale(loss, loss_scale);
  Bindings b;
  b.emplace("image", batch.image);
  b.emplace("text", batch.text);
  b.emplace("labels", batch.labels);
  if (layout.image_enabled) bind_adapter(b, "image", adapters.image);
  if (layout.text_enabled) bind_adapter(b, "text", adapters.text);
  g.forward(b);
  g.backward(loss);
  return StitchedResult{g.value(loss).item(), collect_gradients(g, layout)};
}

Tensor adapted_features(const EncodedBatch& batch, const AdapterParams& adapters) {
  const Tensor image = adapters.layout.image_enabled ? adapters.image.apply(batch.image) : batch.image;
  const Tensor text = adapters.layout.text_enabled ? adapters.text.apply(batch.text) : batch.text;
  return concat_cols(image, text);
}

Tensor predict_logits(const EncodedBatch& batch, const AdapterParams& adapters, const FrozenCore& core) {
  return core_logits(adapted_features(batch, adapters), core);
}

double accuracy(const EncodedBatch& batch, const AdapterParams& adapters, const FrozenCore& core) {
  if (batch.size() == 0) return 0.0;
  const Tensor logits = predict_logits(batch, adapters, core);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    if (static_cast<double>(best) == batch.labels(r, 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace fednano
