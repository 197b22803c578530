// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fednano/data.hpp"
#include "fednano/federation.hpp"
#include "fednano/model.hpp"
#include "fednano/rng.hpp"
#include "fednano/tensor.hpp"

namespace fednano::testing {

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// |a - b| / max(1, |a|, |b|): relative where values are large, absolute near zero.
inline double scaled_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

/// A small task, frozen model and K-client partition that trains in well under a second.
struct SmallSetup {
  TaskSpec task;
  ModelDims dims;
  FrozenModel model;
  std::vector<ClientDataset> datasets;
};

inline SmallSetup small_setup(std::size_t clients, double alpha, std::uint64_t seed,
                              std::size_t samples = 300) {
  SmallSetup s;
  s.task.samples = samples;
  s.dims.d_hidden = 32;
  s.model = init_frozen(derive_seed(seed, "model"), s.dims);
  const auto all = generate_synthetic_task(s.task, derive_seed(seed, "task"));
  const auto parts = dirichlet_partition(all, clients, alpha, derive_seed(seed, "partition"));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    s.datasets.push_back(split_train_val_test(parts[k], {}, derive_seed(seed, "split"), k));
  }
  return s;
}

inline FederationConfig small_config(Strategy strategy, std::size_t clients, std::size_t rank = 4) {
  FederationConfig c;
  c.clients = clients;
  c.rounds = 3;
  c.strategy = strategy;
  c.adapters.rank = rank;
  c.learning_rate = 0.1;
  c.local_steps = 6;
  return c;
}

}  // namespace fednano::testing
