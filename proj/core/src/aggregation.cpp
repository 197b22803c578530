// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/aggregation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fednano/error.hpp"

namespace fednano {

namespace {

// Validated updates in canonical (client id) order, with size weights.
struct Ordered {
  std::vector<const RoundUpdate*> updates;
  std::vector<double> weights;
  std::size_t length = 0;
};

Ordered canonical(std::span<const RoundUpdate> updates) {
  if (updates.empty()) throw InvalidArgument("cannot merge an empty update list");
  Ordered o;
  o.length = updates.front().theta.size();
  double total = 0.0;
  for (const RoundUpdate& u : updates) {
    u.validate();
    if (u.theta.size() != o.length) {
      throw ShapeError("client " + std::to_string(u.client_id) + " uploaded " +
                       std::to_string(u.theta.size()) + " values, expected " +
                       std::to_string(o.length));
    }
    o.updates.push_back(&u);
    total += static_cast<double>(u.n_samples);
  }
  std::stable_sort(o.updates.begin(), o.updates.end(),
                   [](const RoundUpdate* a, const RoundUpdate* b) { return a->client_id < b->client_id; });
  for (const RoundUpdate* u : o.updates) o.weights.push_back(static_cast<double>(u->n_samples) / total);
  return o;
}

}  // namespace

void RoundUpdate::validate() const {
  if (n_samples < 1) {
    throw InvalidArgument("client " + std::to_string(client_id) + " reported zero samples");
  }
  if (fisher && fisher->values.size() != theta.size()) {
    throw ShapeError("client " + std::to_string(client_id) + " Fisher length " +
                     std::to_string(fisher->values.size()) + " differs from theta length " +
                     std::to_string(theta.size()));
  }
}

std::vector<double> fedavg_merge(std::span<const RoundUpdate> updates) {
  const Ordered o = canonical(updates);
  std::vector<double> global(o.length, 0.0);
  for (std::size_t k = 0; k < o.updates.size(); ++k) {
    const std::vector<double>& theta = o.updates[k]->theta;
    for (std::size_t i = 0; i < o.length; ++i) global[i] += o.weights[k] * theta[i];
  }
  return global;
}

std::vector<double> fisher_merge(std::span<const RoundUpdate> updates, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("Fisher merge epsilon must be positive");
  const Ordered o = canonical(updates);
  for (const RoundUpdate* u : o.updates) {
    if (!u->fisher) {
      throw InvalidArgument("client " + std::to_string(u->client_id) +
                            " sent no Fisher diagonal for a Fisher merge");
    }
  }
  std::vector<double> numerator(o.length, 0.0);
  std::vector<double> denominator(o.length, 0.0);
  for (std::size_t k = 0; k < o.updates.size(); ++k) {
    const std::vector<double>& theta = o.updates[k]->theta;
    const std::vector<double>& fisher = o.updates[k]->fisher->values;
    for (std::size_t i = 0; i < o.length; ++i) {
      const double precision = o.weights[k] * (fisher[i] + epsilon);
      numerator[i] += precision * theta[i];
      denominator[i] += precision;
    }
  }
  for (std::size_t i = 0; i < o.length; ++i) numerator[i] /= denominator[i];
  return numerator;
}

std::vector<double> proximal_gradient(std::span<const double> theta,
                                      std::span<const double> theta_global, double mu) {
  if (theta.size() != theta_global.size()) {
    throw ShapeError("proximal term: local has " + std::to_string(theta.size()) +
                     " values, global has " + std::to_string(theta_global.size()));
  }
  if (!(mu >= 0.0)) throw InvalidArgument("proximal mu must be nonnegative");
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = mu * (theta[i] - theta_global[i]);
  return out;
}

}  // namespace fednano
