// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fednano/aggregation.hpp"
#include "fednano/data.hpp"
#include "fednano/model.hpp"
#include "fednano/wire.hpp"

namespace fednano {

enum class Strategy {
  kFedAvg,     // size-weighted averaging
  kFedProx,    // FedAvg server, proximal term on clients
  kFedNano,    // Fisher merge, exact per-sample Fisher after local training
  kFedNanoEF,  // Fisher merge, Fisher accumulated from training gradients
};

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);
bool strategy_uploads_fisher(Strategy s);

struct FederationConfig {
  std::size_t clients = 5;
  std::size_t rounds = 10;
  /// Local SGD steps per round; 0 means one local epoch, ceil(|train| / batch).
  std::size_t local_steps = 0;
  std::size_t batch_size = 8;
  AdapterLayout adapters;
  double learning_rate = 0.2;
  /// Heavy-ball momentum; the buffer restarts at zero every round.
  double momentum = 0.9;
  Strategy strategy = Strategy::kFedNano;
  double prox_mu = 0.001;
  double fisher_epsilon = 1e-8;
  std::uint64_t seed = 1;
  /// Evaluate every n rounds (the last round is always evaluated); 0 = only last.
  std::size_t eval_every = 1;
  /// Clients trained concurrently within a round. Does not affect results.
  std::size_t threads = 1;

  void validate() const;
  /// Stable text form of every field that influences results (not threads).
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// A client's data after the frozen pipeline, ready for adapter training.
struct EncodedClient {
  std::uint64_t client_id = 0;
  EncodedBatch train;
  EncodedBatch test;  // may be empty
};

EncodedClient encode_client(const ClientDataset& dataset, const FrozenModel& model);

struct ClientRoundStats {
  std::uint64_t client_id = 0;
  std::size_t n_samples = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;  // mean minibatch loss over the local steps
  PassCounter passes;
  std::size_t upload_params = 0;         // theta values on the wire
  std::size_t upload_fisher_params = 0;  // Fisher values on the wire
  std::size_t upload_bytes = 0;          // whole message including header
  /// Smallest uploaded Fisher entry; empty when no Fisher diagonal was sent.
  std::optional<double> fisher_min;
  double test_accuracy = 0.0;            // global model on this client's test split
  std::size_t test_size = 0;
};

/// One client's local phase: start from theta_global, run the local steps of
/// minibatch SGD through the split model, attach a Fisher diagonal when the
/// strategy needs one.
RoundUpdate client_update(std::span<const double> theta_global, const EncodedClient& client,
                          const FederationConfig& config, const FrozenModel& model,
                          std::size_t round, ClientRoundStats* stats = nullptr);

/// SGD on a single dataset with the same sampler and optimizer a lone client
/// would use in round 1. The reference point for K = 1 federation.
std::vector<double> train_centralized(std::span<const double> theta_init, const EncodedClient& data,
                                      const FederationConfig& config, const FrozenModel& model,
                                      std::size_t steps);

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::uint64_t global_checksum = 0;
  std::uint64_t pipeline_checksum = 0;
  std::uint64_t core_checksum = 0;
  std::vector<ClientRoundStats> clients;  // ordered by client id
  bool evaluated = false;
  /// Mean test accuracy over clients with a nonempty test split.
  double average_accuracy = 0.0;
  PassCounter passes;
  std::size_t upload_params = 0;
  std::size_t upload_fisher_params = 0;
  std::size_t upload_bytes = 0;
};

struct RoundHistory {
  std::vector<RoundRecord> rounds;
  std::vector<double> initial_theta;
  std::vector<double> final_theta;
};

/// Synchronous full-participation orchestrator.
class Federation {
 public:
  Federation(FederationConfig config, FrozenModel model, std::vector<ClientDataset> datasets);

  /// Broadcast, train every client, decode uploads, aggregate. A failing
  /// client aborts the round and leaves the global state untouched.
  /// `execution_order` permutes the order clients are run in (empty: by id).
  RoundRecord run_round(std::span<const std::size_t> execution_order = {});

  const std::vector<double>& global_theta() const noexcept { return theta_; }
  std::size_t completed_rounds() const noexcept { return round_; }
  const FederationConfig& config() const noexcept { return config_; }
  const FrozenModel& model() const noexcept { return model_; }
  const std::vector<EncodedClient>& clients() const noexcept { return clients_; }

  Checkpoint checkpoint() const;
  /// Adopt a checkpoint produced by a federation with the same config.
  void restore(const Checkpoint& checkpoint);

 private:
  FederationConfig config_;
  FrozenModel model_;
  std::vector<EncodedClient> clients_;
  std::vector<double> theta_;
  std::size_t round_ = 0;
};

struct FederationOptions {
  /// Written after every round when set.
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<Checkpoint> resume_from;
  /// Client execution order per round (empty: by id).
  std::vector<std::size_t> execution_order;
};

/// Runs rounds [resume, R) and returns the history of the rounds run here.
RoundHistory run_federation(const FederationConfig& config, const FrozenModel& model,
                            const std::vector<ClientDataset>& datasets,
                            const FederationOptions& options = {});

/// Parameter and traffic accounting for a configuration.
struct CommunicationReport {
  std::size_t upload_adapter_params = 0;  // per client per round
  std::size_t upload_fisher_params = 0;   // per client per round, 0 without Fisher
  std::size_t upload_total_params = 0;
  std::size_t upload_bytes = 0;           // serialized message incl. header
  std::size_t trainable_params = 0;
  std::size_t client_frozen_params = 0;
  std::size_t client_held_params = 0;     // frozen pipeline + adapters
  std::size_t server_held_params = 0;     // frozen core
  std::size_t total_params = 0;           // stitched model
  double upload_fraction = 0.0;           // adapters / total
  double upload_with_fisher_fraction = 0.0;
  double client_fraction = 0.0;           // client-held / total
  double storage_reduction = 0.0;         // 1 - client_fraction
};

CommunicationReport communication_report(const FederationConfig& config, const ModelDims& dims);

}  // namespace fednano
