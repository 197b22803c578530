// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/federation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

#include "fednano/error.hpp"
#include "fednano/fisher.hpp"
#include "fednano/rng.hpp"

namespace fednano {

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kFedProx: return "fedprox";
    case Strategy::kFedNano: return "fednano";
    case Strategy::kFedNanoEF: return "fednano_ef";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kFedAvg, Strategy::kFedProx, Strategy::kFedNano, Strategy::kFedNanoEF}) {
    if (strategy_name(s) == name) return s;
  }
  throw InvalidArgument("unknown strategy '" + std::string(name) +
                        "' (expected fedavg, fedprox, fednano or fednano_ef)");
}

bool strategy_uploads_fisher(Strategy s) {
  return s == Strategy::kFedNano || s == Strategy::kFedNanoEF;
}

void FederationConfig::validate() const {
  if (clients < 1) throw InvalidArgument("clients must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(prox_mu >= 0.0)) throw InvalidArgument("prox_mu must be >= 0");
  if (!(fisher_epsilon > 0.0)) throw InvalidArgument("fisher_epsilon must be > 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  adapters.validate();
}

std::string FederationConfig::canonical() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "clients=%zu;rounds=%zu;local_steps=%zu;batch_size=%zu;rank=%zu;d_model=%zu;"
                "image_adapter=%d;text_adapter=%d;learning_rate=%.17g;momentum=%.17g;strategy=%s;"
                "prox_mu=%.17g;fisher_epsilon=%.17g;seed=%llu;eval_every=%zu",
                clients, rounds, local_steps, batch_size, adapters.rank, adapters.d_model,
                adapters.image_enabled ? 1 : 0, adapters.text_enabled ? 1 : 0, learning_rate, momentum,
                std::string(strategy_name(strategy)).c_str(), prox_mu, fisher_epsilon,
                static_cast<unsigned long long>(seed), eval_every);
  return buf;
}

std::uint64_t FederationConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : canonical()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

EncodedClient encode_client(const ClientDataset& dataset, const FrozenModel& model) {
  EncodedClient c;
  c.client_id = dataset.client_id;
  if (!dataset.train.empty()) c.train = encode_samples(model.pipeline, model.dims, dataset.train);
  if (!dataset.test.empty()) c.test = encode_samples(model.pipeline, model.dims, dataset.test);
  return c;
}

namespace {

struct LocalResult {
  std::vector<double> theta;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  PassCounter passes;
  std::optional<FisherDiagonal> ef_fisher;
};

std::size_t steps_for(const FederationConfig& config, std::size_t n_train) {
  if (config.local_steps > 0) return config.local_steps;
  return (n_train + config.batch_size - 1) / config.batch_size;
}

// Minibatch SGD (optional heavy-ball momentum) through the split model. Batches
// walk a seeded permutation of the training set and reshuffle per epoch.
LocalResult local_train(std::span<const double> theta_global, const EncodedClient& client,
                        const FederationConfig& config, const FrozenModel& model, std::size_t round,
                        std::size_t steps, bool proximal, bool accumulate_ef) {
  const std::size_t n = client.train.size();
  if (n == 0) {
    throw InvalidArgument("client " + std::to_string(client.client_id) + " has an empty training split");
  }
  if (theta_global.size() != config.adapters.flat_size()) {
    throw ShapeError("global adapter vector has " + std::to_string(theta_global.size()) +
                     " values, layout needs " + std::to_string(config.adapters.flat_size()));
  }
  AdapterParams adapters = adapters_from_flat(config.adapters, theta_global);
  std::vector<double> theta(theta_global.begin(), theta_global.end());
  std::vector<double> velocity(theta.size(), 0.0);
  ClientModel client_model(config.adapters);
  ServerModel server(model.core, model.dims);
  std::optional<EmpiricalFisherAccumulator> ef;
  if (accumulate_ef) ef.emplace(theta.size());

  Rng rng(derive_seed(config.seed, "sampler", {round, client.client_id}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t cursor = 0;

  double loss_sum = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    if (cursor == n) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take = std::min(config.batch_size, n - cursor);
    const EncodedBatch batch = gather(client.train, std::span(order).subspan(cursor, take));
    cursor += take;

    const BoundaryActivation act = client_model.forward(batch, adapters);
    const ServerStep server_step = server.forward_loss(act, batch.labels);
    std::vector<double> grad = client_model.backward(server_step.gradient);
    loss_sum += server_step.loss;

    if (ef) ef->accumulate(grad, take);
    if (proximal) {
      const std::vector<double> prox = proximal_gradient(theta, theta_global, config.prox_mu);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += prox[i];
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      velocity[i] = config.momentum * velocity[i] + grad[i];
      theta[i] -= config.learning_rate * velocity[i];
    }
    adapters.unflatten(theta);
  }

  LocalResult result;
  result.theta = std::move(theta);
  result.steps = steps;
  result.mean_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
  result.passes = client_model.passes();
  if (ef && steps > 0) result.ef_fisher = ef->finalize();
  return result;
}

}  // namespace

RoundUpdate client_update(std::span<const double> theta_global, const EncodedClient& client,
                          const FederationConfig& config, const FrozenModel& model,
                          std::size_t round, ClientRoundStats* stats) {
  const std::size_t steps = steps_for(config, client.train.size());
  const bool proximal = config.strategy == Strategy::kFedProx;
  const bool ef = config.strategy == Strategy::kFedNanoEF;
  LocalResult local = local_train(theta_global, client, config, model, round, steps, proximal, ef);

  RoundUpdate update;
  update.client_id = client.client_id;
  update.n_samples = client.train.size();
  PassCounter passes = local.passes;
  if (config.strategy == Strategy::kFedNano) {
    const AdapterParams trained = adapters_from_flat(config.adapters, local.theta);
    update.fisher = estimate_fisher_exact(trained, client.train, model.core, model.dims, &passes);
  } else if (ef) {
    if (local.ef_fisher) {
      update.fisher = std::move(local.ef_fisher);
    } else {
      // Zero local steps: no gradients seen, so no information.
      update.fisher = FisherDiagonal{std::vector<double>(local.theta.size(), 0.0), 1};
    }
  }
  update.theta = std::move(local.theta);
  if (update.fisher) update.fisher->validate();

  if (stats != nullptr) {
    stats->client_id = client.client_id;
    stats->n_samples = update.n_samples;
    stats->steps = local.steps;
    stats->train_loss = local.mean_loss;
    stats->passes = passes;
  }
  return update;
}

std::vector<double> train_centralized(std::span<const double> theta_init, const EncodedClient& data,
                                      const FederationConfig& config, const FrozenModel& model,
                                      std::size_t steps) {
  return local_train(theta_init, data, config, model, 1, steps, false, false).theta;
}

Federation::Federation(FederationConfig config, FrozenModel model, std::vector<ClientDataset> datasets)
    : config_(std::move(config)), model_(std::move(model)) {
  config_.validate();
  model_.dims.validate();
  if (config_.adapters.d_model != model_.dims.d_model) {
    throw InvalidArgument("adapter d_model " + std::to_string(config_.adapters.d_model) +
                          " differs from model d_model " + std::to_string(model_.dims.d_model));
  }
  if (datasets.size() != config_.clients) {
    throw InvalidArgument("config expects " + std::to_string(config_.clients) + " clients, got " +
                          std::to_string(datasets.size()) + " datasets");
  }
  std::sort(datasets.begin(), datasets.end(),
            [](const ClientDataset& a, const ClientDataset& b) { return a.client_id < b.client_id; });
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    if (k > 0 && datasets[k].client_id == datasets[k - 1].client_id) {
      throw InvalidArgument("duplicate client id " + std::to_string(datasets[k].client_id));
    }
    if (datasets[k].train.empty()) {
      throw InvalidArgument("client " + std::to_string(datasets[k].client_id) +
                            " has an empty training split");
    }
    clients_.push_back(encode_client(datasets[k], model_));
  }
  theta_ = init_adapters(config_.adapters, derive_seed(config_.seed, "adapters")).flatten();
}

RoundRecord Federation::run_round(std::span<const std::size_t> execution_order) {
  const std::size_t k_clients = clients_.size();
  std::vector<std::size_t> order(execution_order.begin(), execution_order.end());
  if (order.empty()) {
    order.resize(k_clients);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  {
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != k_clients || sorted[i] != i) {
        throw InvalidArgument("execution order must be a permutation of the client indices");
      }
    }
  }

  const std::size_t round = round_ + 1;
  std::vector<EncodedUpdate> uploads(k_clients);
  std::vector<ClientRoundStats> stats(k_clients);
  std::vector<std::exception_ptr> errors(k_clients);

  auto work = [&](std::size_t index) {
    try {
      const RoundUpdate update = client_update(theta_, clients_[index], config_, model_, round, &stats[index]);
      uploads[index] = encode_round_update(update);
      stats[index].upload_params = update.theta.size();
      stats[index].upload_fisher_params = update.fisher ? update.fisher->values.size() : 0;
      stats[index].upload_bytes = uploads[index].bytes.size();
      if (update.fisher) {
        stats[index].fisher_min = *std::min_element(update.fisher->values.begin(), update.fisher->values.end());
      }
    } catch (...) {
      errors[index] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(config_.threads, k_clients);
  if (workers <= 1) {
    for (std::size_t index : order) {
      work(index);
      if (errors[index]) break;
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t pos = t; pos < order.size(); pos += workers) work(order[pos]);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  for (std::size_t index : order) {
    if (!errors[index]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[index]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw Error("round " + std::to_string(round) + " aborted: client " +
                std::to_string(clients_[index].client_id) + " failed: " + what);
  }

  // Server side: decode what went over the wire and merge.
  std::vector<RoundUpdate> received;
  received.reserve(k_clients);
  for (const EncodedUpdate& upload : uploads) received.push_back(decode_round_update(upload.bytes));
  std::vector<double> merged = strategy_uploads_fisher(config_.strategy)
                                   ? fisher_merge(received, config_.fisher_epsilon)
                                   : fedavg_merge(received);

  RoundRecord record;
  record.round = round;
  record.clients = std::move(stats);
  for (const ClientRoundStats& s : record.clients) {
    record.passes += s.passes;
    record.upload_params += s.upload_params;
    record.upload_fisher_params += s.upload_fisher_params;
    record.upload_bytes += s.upload_bytes;
  }

  theta_ = std::move(merged);
  round_ = round;
  record.global_checksum = checksum(std::span<const double>(theta_));
  record.pipeline_checksum = model_.pipeline.checksum();
  record.core_checksum = model_.core.checksum();

  const bool last = round == config_.rounds;
  record.evaluated = last || (config_.eval_every > 0 && round % config_.eval_every == 0);
  if (record.evaluated) {
    const AdapterParams global = adapters_from_flat(config_.adapters, theta_);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < k_clients; ++k) {
      ClientRoundStats& s = record.clients[k];
      s.test_size = clients_[k].test.size();
      if (s.test_size == 0) continue;
      s.test_accuracy = accuracy(clients_[k].test, global, model_.core);
      sum += s.test_accuracy;
      ++counted;
    }
    record.average_accuracy = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  }
  return record;
}

Checkpoint Federation::checkpoint() const {
  return Checkpoint{round_, config_.hash(), config_.adapters, theta_};
}

void Federation::restore(const Checkpoint& checkpoint) {
  if (checkpoint.config_hash != config_.hash()) {
    throw InvalidArgument("checkpoint was written under a different configuration");
  }
  if (!(checkpoint.layout == config_.adapters) || checkpoint.theta.size() != theta_.size()) {
    throw InvalidArgument("checkpoint adapter layout differs from the configuration");
  }
  if (checkpoint.round > config_.rounds) throw InvalidArgument("checkpoint is past the final round");
  theta_ = checkpoint.theta;
  round_ = static_cast<std::size_t>(checkpoint.round);
}

RoundHistory run_federation(const FederationConfig& config, const FrozenModel& model,
                            const std::vector<ClientDataset>& datasets, const FederationOptions& options) {
  Federation federation(config, model, datasets);
  if (options.resume_from) federation.restore(*options.resume_from);
  RoundHistory history;
  history.initial_theta = federation.global_theta();
  while (federation.completed_rounds() < config.rounds) {
    history.rounds.push_back(federation.run_round(options.execution_order));
    if (options.checkpoint_path) write_checkpoint(*options.checkpoint_path, federation.checkpoint());
  }
  history.final_theta = federation.global_theta();
  return history;
}

CommunicationReport communication_report(const FederationConfig& config, const ModelDims& dims) {
  config.adapters.validate();
  dims.validate();
  if (config.adapters.d_model != dims.d_model) {
    throw InvalidArgument("adapter d_model differs from model d_model");
  }
  CommunicationReport r;
  r.trainable_params = config.adapters.flat_size();
  r.upload_adapter_params = r.trainable_params;
  r.upload_fisher_params = strategy_uploads_fisher(config.strategy) ? r.trainable_params : 0;
  r.upload_total_params = r.upload_adapter_params + r.upload_fisher_params;
  r.upload_bytes = EncodedUpdate::kHeaderBytes + r.upload_total_params * sizeof(double);
  r.client_frozen_params = frozen_pipeline_parameter_count(dims);
  r.client_held_params = r.client_frozen_params + r.trainable_params;
  r.server_held_params = frozen_core_parameter_count(dims);
  r.total_params = r.client_frozen_params + r.server_held_params + r.trainable_params;
  const auto total = static_cast<double>(r.total_params);
  r.upload_fraction = static_cast<double>(r.upload_adapter_params) / total;
  r.upload_with_fisher_fraction = static_cast<double>(r.upload_total_params) / total;
  r.client_fraction = static_cast<double>(r.client_held_params) / total;
  r.storage_reduction = 1.0 - r.client_fraction;
  return r;
}

}  // namespace fednano
