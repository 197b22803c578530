// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fednano/graph.hpp"
#include "fednano/sample.hpp"
#include "fednano/tensor.hpp"

namespace fednano {

struct ModelDims {
  std::size_t d_img = 16;
  std::size_t d_emb = 16;
  std::size_t d_model = 32;
  std::size_t d_hidden = 64;
  std::size_t n_answers = 10;
  std::size_t vocab = 32;

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

/// Client-resident frozen encoders and connector.
///
/// image path: connector(tanh(v * image_weight + image_bias))
/// text path:  connector(mean_t token_embedding[q_t])
/// connector:  x * connector_weight + connector_bias, shared by both paths.
struct FrozenPipeline {
  Tensor image_weight;      // d_img x d_emb
  Tensor image_bias;        // 1 x d_emb
  Tensor token_embedding;   // vocab x d_emb
  Tensor connector_weight;  // d_emb x d_model
  Tensor connector_bias;    // 1 x d_model

  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
  std::uint64_t checksum() const;
};

/// Server-resident frozen core: concat(img, txt) -> relu hidden -> logits.
struct FrozenCore {
  Tensor hidden_weight;  // 2*d_model x d_hidden
  Tensor hidden_bias;    // 1 x d_hidden
  Tensor output_weight;  // d_hidden x n_answers
  Tensor output_bias;    // 1 x n_answers

  std::vector<const Tensor*> tensors() const;
  std::size_t parameter_count() const;
  std::uint64_t checksum() const;
};

struct FrozenModel {
  ModelDims dims;
  FrozenPipeline pipeline;
  FrozenCore core;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], one derived stream
/// per tensor, so equal seeds give bit-identical models.
FrozenModel init_frozen(std::uint64_t seed, const ModelDims& dims);

/// Closed-form parameter counts; tests check them against enumeration.
std::size_t frozen_pipeline_parameter_count(const ModelDims& dims);
std::size_t frozen_core_parameter_count(const ModelDims& dims);

/// Residual low-rank adapter: y = x + scale * (x * down) * up.
struct NanoAdapter {
  Tensor down;  // d_model x rank
  Tensor up;    // rank x d_model
  double scale = 1.0;

  std::size_t rank() const { return down.cols(); }
  std::size_t d_model() const { return down.rows(); }
  std::size_t parameter_count() const { return down.size() + up.size(); }
  Tensor apply(const Tensor& x) const;
};

/// Which adapters exist and how big they are. Determines the flat layout.
struct AdapterLayout {
  std::size_t rank = 8;
  std::size_t d_model = 32;
  bool image_enabled = true;
  bool text_enabled = true;

  void validate() const;
  std::size_t per_adapter() const { return 2 * rank * d_model; }
  std::size_t flat_size() const {
    return per_adapter() * ((image_enabled ? 1 : 0) + (text_enabled ? 1 : 0));
  }
  bool operator==(const AdapterLayout&) const = default;
};

/// The image (A_I) and text (A_T) adapters of one participant.
///
/// Flat order: image.down, image.up, text.down, text.up, each row-major,
/// disabled adapters omitted. A disabled adapter stays at its identity
/// initialization.
struct AdapterParams {
  AdapterLayout layout;
  NanoAdapter image;
  NanoAdapter text;

  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  std::size_t flat_size() const { return layout.flat_size(); }
  std::size_t trainable_count() const { return flat_size(); }
  std::uint64_t checksum() const;
};

/// down matrices random (same scheme as init_frozen), up matrices zero, scale 1.
AdapterParams init_adapters(const AdapterLayout& layout, std::uint64_t seed);
AdapterParams adapters_from_flat(const AdapterLayout& layout, std::span<const double> flat);

/// Frozen-pipeline outputs for a set of samples: the inputs to the adapters.
struct EncodedBatch {
  Tensor image;   // B x d_model (connector output, image path)
  Tensor text;    // B x d_model (connector output, text path)
  Tensor labels;  // B x 1, class ids stored as doubles

  std::size_t size() const { return labels.empty() ? 0 : labels.rows(); }
};

EncodedBatch encode_samples(const FrozenPipeline& pipeline, const ModelDims& dims,
                            std::span<const Sample> samples);
/// Rows `indices` of an encoded set, in the given order.
EncodedBatch gather(const EncodedBatch& all, std::span<const std::size_t> indices);

/// Values crossing the client/server split. Carries adapted features only,
/// never raw inputs.
struct BoundaryActivation {
  Tensor values;  // B x 2*d_model: [adapted image | adapted text]
  std::uint64_t batch_id = 0;
};

struct BoundaryGradient {
  Tensor values;  // same shape as the activation it answers
  std::uint64_t batch_id = 0;
};

/// Forward/backward pass counts charged to the training budget.
struct PassCounter {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;

  PassCounter& operator+=(const PassCounter& o) {
    forward += o.forward;
    backward += o.backward;
    return *this;
  }
  bool operator==(const PassCounter&) const = default;
};

/// Client half of the split: adapters on top of pre-encoded frozen features.
///
/// forward() caches the graph for exactly one batch; backward() must answer
/// that batch (matching batch_id) and yields gradients for enabled adapters
/// only, in the flat order of AdapterParams.
class ClientModel {
 public:
  explicit ClientModel(const AdapterLayout& layout);

  BoundaryActivation forward(const EncodedBatch& batch, const AdapterParams& adapters);
  std::vector<double> backward(const BoundaryGradient& gradient);

  const PassCounter& passes() const noexcept { return passes_; }

 private:
  AdapterLayout layout_;
  Graph graph_;
  NodeId activation_ = 0;
  std::uint64_t cached_batch_ = 0;
  bool cached_ = false;
  PassCounter passes_;
};

struct ServerStep {
  double loss = 0.0;
  Tensor logits;
  BoundaryGradient gradient;
};

/// Server half of the split: frozen core plus mean softmax cross-entropy.
/// `loss_scale` multiplies the loss (and hence all gradients).
class ServerModel {
 public:
  ServerModel(const FrozenCore& core, const ModelDims& dims, double loss_scale = 1.0);

  ServerStep forward_loss(const BoundaryActivation& activation, const Tensor& labels);

 private:
  ModelDims dims_;
  Graph graph_;
  NodeId logits_ = 0;
  NodeId loss_ = 0;
};

/// Loss and flat adapter gradient of the monolithic (unsplit) graph.
struct StitchedResult {
  double loss = 0.0;
  std::vector<double> gradient;
};

StitchedResult stitched_loss_and_gradient(const EncodedBatch& batch, const AdapterParams& adapters,
                                          const FrozenCore& core, const ModelDims& dims,
                                          double loss_scale = 1.0);

/// Inference without graphs or pass accounting.
Tensor predict_logits(const EncodedBatch& batch, const AdapterParams& adapters,
                      const FrozenCore& core);
/// Adapted boundary values without graphs: [A_I(image) | A_T(text)].
Tensor adapted_features(const EncodedBatch& batch, const AdapterParams& adapters);
/// Fraction of rows whose argmax logit equals the label. Empty batch -> 0.
double accuracy(const EncodedBatch& batch, const AdapterParams& adapters, const FrozenCore& core);

}  // namespace fednano
