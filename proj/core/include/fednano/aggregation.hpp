// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fednano/fisher.hpp"

namespace fednano {

/// What one client uploads at the end of a round.
struct RoundUpdate {
  std::uint64_t client_id = 0;
  std::vector<double> theta;
  std::optional<FisherDiagonal> fisher;
  std::size_t n_samples = 0;

  void validate() const;
};

/// theta[i] = sum_k w_k theta_k[i], w_k = n_k / sum_j n_j.
///
/// Both merges visit updates in ascending client_id order (stable for equal
/// ids), which makes them exactly invariant to the order of the input list.
std::vector<double> fedavg_merge(std::span<const RoundUpdate> updates);

/// Coordinate-wise precision-weighted average:
///   theta[i] = sum_k w_k (F_k[i] + eps) theta_k[i] / sum_k w_k (F_k[i] + eps)
/// with the same w_k as fedavg_merge. eps keeps zero-Fisher coordinates
/// well-defined and reduces to FedAvg where all F_k[i] are equal.
std::vector<double> fisher_merge(std::span<const RoundUpdate> updates, double epsilon = 1e-8);

/// FedProx client-side term mu * (theta - theta_global), added to the loss
/// gradient at every local step.
std::vector<double> proximal_gradient(std::span<const double> theta,
                                      std::span<const double> theta_global, double mu);

}  // namespace fednano
