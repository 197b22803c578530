// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fednano/data.hpp"
#include "fednano/error.hpp"
#include "fednano/federation.hpp"
#include "fednano/model.hpp"

namespace fednano {

/// Rejected configuration. `keys()` lists every offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys)
      : Error(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const noexcept { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// Everything needed to run and compare strategies over seeds and sweeps.
struct ExperimentSpec {
  TaskSpec task;
  ModelDims dims;
  std::size_t clients = 5;
  double alpha = 0.1;
  SplitRatios splits;
  /// Template for every run; strategy, seed and swept fields are overwritten.
  FederationConfig federation;
  std::vector<Strategy> strategies{Strategy::kFedNano};
  std::vector<std::uint64_t> seeds{1};
  /// Adapter-rank sweep: one variant per rank.
  std::vector<std::size_t> sweep_rank;
  /// Communication-frequency sweep: one variant per round count, each with
  /// local_steps = total_local_steps / rounds.
  std::vector<std::size_t> sweep_rounds;
  std::size_t total_local_steps = 0;
  std::filesystem::path output_dir = "runs";

  bool operator==(const ExperimentSpec& o) const;
};

using ConfigOverrides = std::map<std::string, std::string, std::less<>>;

/// Documented config keys in emission order.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines (# comments, blank lines allowed), applies
/// `overrides` on top, fills defaults and validates. Unknown, malformed or
/// out-of-range keys are collected and reported together.
ExperimentSpec parse_config_text(std::string_view text, const ConfigOverrides& overrides = {});
ExperimentSpec parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
/// Full config text with every key; parse_config_text(emit_config(s)) == s.
std::string emit_config(const ExperimentSpec& spec);

/// The frozen model and client datasets a given seed produces.
struct PreparedRun {
  FrozenModel model;
  std::vector<ClientDataset> datasets;
};
PreparedRun prepare_run(const ExperimentSpec& spec, std::uint64_t seed);

/// One federation run of the experiment grid.
struct RunVariant {
  std::string label;  // "fednano", "fednano@rank=4", "fedavg@rounds=5", ...
  std::string sweep;  // "", "rank" or "rounds"
  std::size_t sweep_value = 0;
  FederationConfig config;  // seed left at the template's value
};
std::vector<RunVariant> expand_variants(const ExperimentSpec& spec);

/// Per-round metrics CSV. Starts with "# fednano-rounds v1", then
///   round,acc_c1..acc_cK,acc_avg,train_loss,upload_params,
///   upload_fisher_params,upload_bytes,forward_passes,backward_passes,global_checksum
/// Accuracy cells are empty for rounds that were not evaluated.
std::string rounds_csv(const RoundHistory& history, std::size_t clients);
std::string rounds_csv_header(std::size_t clients);

struct SummaryRow {
  std::string label;
  std::string sweep;
  std::size_t sweep_value = 0;
  std::string strategy;
  std::vector<double> final_accuracy;  // one per seed
  std::size_t upload_params = 0;       // per client per round
};

struct ExperimentResult {
  std::vector<std::filesystem::path> run_files;
  std::filesystem::path summary_csv;
  std::filesystem::path summary_txt;
  std::vector<SummaryRow> summary;
};

/// Runs every (variant, seed) pair, writes runs/<label>__seed<N>.csv, then
/// summary.csv (mean/std/min/max over seeds) and summary.txt (emit_report).
/// A failing run leaves an INCOMPLETE file naming it next to the partial
/// outputs and rethrows.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Reads every rounds CSV under `dir` (or `dir`/runs) and renders a table:
/// one row per label, columns C1..CK and Avg from the last evaluated round,
/// averaged over seeds. Rows whose Avg equals the best Avg at the printed
/// precision are all marked with '*'.
std::string emit_report(const std::filesystem::path& dir);

}  // namespace fednano
