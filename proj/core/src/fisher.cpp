// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/fisher.hpp"

#include <cmath>
#include <string>

#include "fednano/error.hpp"

namespace fednano {

void FisherDiagonal::validate() const {
  if (sample_count < 1) throw InvalidArgument("Fisher diagonal needs at least one sample");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw InvalidArgument("Fisher entry " + std::to_string(i) + " is negative or non-finite");
    }
  }
}

FisherDiagonal estimate_fisher_exact(
    std::size_t n_samples, const std::function<std::vector<double>(std::size_t)>& sample_gradient) {
  if (n_samples == 0) throw InvalidArgument("Fisher estimate needs a nonempty dataset");
  FisherDiagonal f;
  f.sample_count = n_samples;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const std::vector<double> g = sample_gradient(n);
    if (n == 0) {
      f.values.assign(g.size(), 0.0);
    } else if (g.size() != f.values.size()) {
      throw ShapeError("per-sample gradient length changed between samples");
    }
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] += g[i] * g[i];
  }
  const double inv = 1.0 / static_cast<double>(n_samples);
  for (double& v : f.values) v *= inv;
  return f;
}

FisherDiagonal estimate_fisher_exact(const AdapterParams& adapters, const EncodedBatch& dataset,
                                     const FrozenCore& core, const ModelDims& dims,
                                     PassCounter* passes, double loss_scale) {
  if (dataset.size() == 0) throw InvalidArgument("Fisher estimate needs a nonempty dataset");
  ClientModel client(adapters.layout);
  ServerModel server(core, dims, loss_scale);
  FisherDiagonal f = estimate_fisher_exact(dataset.size(), [&](std::size_t n) {
    const std::size_t index[1] = {n};
    const EncodedBatch one = gather(dataset, index);
    const BoundaryActivation act = client.forward(one, adapters);
    const ServerStep step = server.forward_loss(act, one.labels);
    return client.backward(step.gradient);
  });
  if (passes != nullptr) *passes += client.passes();
  return f;
}

EmpiricalFisherAccumulator::EmpiricalFisherAccumulator(std::size_t length) : sum_(length, 0.0) {}

void EmpiricalFisherAccumulator::accumulate(std::span<const double> minibatch_gradient,
                                            std::size_t batch_size) {
  if (minibatch_gradient.size() != sum_.size()) {
    throw ShapeError("EF gradient has " + std::to_string(minibatch_gradient.size()) +
                     " values, accumulator holds " + std::to_string(sum_.size()));
  }
  if (batch_size == 0) throw InvalidArgument("EF accumulation needs a nonempty batch");
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i] += minibatch_gradient[i] * minibatch_gradient[i];
  ++steps_;
  samples_ += batch_size;
}

FisherDiagonal EmpiricalFisherAccumulator::finalize() const {
  if (steps_ == 0) throw InvalidArgument("EF finalize before any accumulation");
  FisherDiagonal f;
  f.sample_count = samples_;
  f.values = sum_;
  const double inv = 1.0 / static_cast<double>(steps_);
  for (double& v : f.values) v *= inv;
  return f;
}

}  // namespace fednano
