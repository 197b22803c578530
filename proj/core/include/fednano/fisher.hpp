// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fednano/model.hpp"

namespace fednano {

/// Diagonal of the empirical Fisher information, aligned coordinate for
/// coordinate with AdapterParams::flatten().
struct FisherDiagonal {
  std::vector<double> values;
  std::size_t sample_count = 0;

  /// Throws unless every entry is finite and >= 0 and sample_count >= 1.
  void validate() const;
};

/// F[i] = (1/N) sum_n g_n[i]^2 where g_n = sample_gradient(n).
/// Accumulates in index order, so the result is a pure function of the
/// multiset of per-sample gradients up to rounding.
FisherDiagonal estimate_fisher_exact(
    std::size_t n_samples, const std::function<std::vector<double>(std::size_t)>& sample_gradient);

/// Exact (extra-pass) estimate over a client's dataset at fixed adapters:
/// one split forward+backward per sample, batch size 1, ground-truth labels.
/// Every pass is charged to `passes` when given.
FisherDiagonal estimate_fisher_exact(const AdapterParams& adapters, const EncodedBatch& dataset,
                                     const FrozenCore& core, const ModelDims& dims,
                                     PassCounter* passes = nullptr, double loss_scale = 1.0);

/// Training-time ("EF") estimate: squared minibatch gradients summed over the
/// local steps of a round, divided by the number of steps on finalize. Costs
/// no passes of its own.
class EmpiricalFisherAccumulator {
 public:
  explicit EmpiricalFisherAccumulator(std::size_t length);

  void accumulate(std::span<const double> minibatch_gradient, std::size_t batch_size);
  FisherDiagonal finalize() const;

  std::size_t steps() const noexcept { return steps_; }
  std::size_t length() const noexcept { return sum_.size(); }

 private:
  std::vector<double> sum_;
  std::size_t steps_ = 0;
  std::size_t samples_ = 0;
};

}  // namespace fednano
