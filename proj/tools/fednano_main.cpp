// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0
//
// fednano command-line front end.
//
//   fednano run <config>        run every (strategy, seed) pair, write CSVs
//   fednano report <dir>        print the comparison table for a run dir
//   fednano partition <config>  write the partitioned dataset fixture
//   fednano account <config>    print parameter and traffic accounting
//   fednano defaults            print a config with every default
//
// Any config key can be overridden on the command line as --<key>=<value>.
// FEDNANO_OUTPUT_ROOT, when set, is prefixed to relative output directories.
// Exit codes: 0 ok, 1 run failure, 2 configuration error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "fednano/experiment.hpp"
#include "fednano/federation.hpp"
#include "fednano/model.hpp"
#include "fednano/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfigError = 2;

struct Overrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    for (const std::string& key : fednano::config_keys()) {
      cmd->add_option("--" + key, values[key], "override config key '" + key + "'");
    }
  }

  fednano::ConfigOverrides collect() const {
    fednano::ConfigOverrides out;
    for (const auto& [k, v] : values) {
      if (!v.empty()) out[k] = v;
    }
    return out;
  }
};

fednano::ExperimentSpec load(const std::string& path, const Overrides& overrides) {
  fednano::ExperimentSpec spec = fednano::parse_config(path, overrides.collect());
  if (const char* root = std::getenv("FEDNANO_OUTPUT_ROOT"); root && *root && spec.output_dir.is_relative()) {
    spec.output_dir = std::filesystem::path(root) / spec.output_dir;
  }
  return spec;
}

int cmd_run(const fednano::ExperimentSpec& spec) {
  std::filesystem::create_directories(spec.output_dir);
  {
    std::ofstream cfg(spec.output_dir / "config.conf");
    cfg << fednano::emit_config(spec);
  }
  const fednano::ExperimentResult result = fednano::run_experiment(spec);
  std::cout << "wrote " << result.run_files.size() << " run histories to " << (spec.output_dir / "runs").string()
            << "\n\n";
  std::ifstream txt(result.summary_txt);
  std::cout << txt.rdbuf();
  return kExitOk;
}

std::size_t enumerate(const std::vector<const fednano::Tensor*>& tensors) {
  std::size_t n = 0;
  for (const fednano::Tensor* t : tensors) n += t->size();
  return n;
}

int cmd_account(const fednano::ExperimentSpec& spec) {
  fednano::FederationConfig config = spec.federation;
  config.clients = spec.clients;
  config.strategy = spec.strategies.front();
  const fednano::CommunicationReport r = fednano::communication_report(config, spec.dims);

  // Instantiate the model and count what is actually there.
  const fednano::FrozenModel model = fednano::init_frozen(0, spec.dims);
  const fednano::AdapterParams adapters = fednano::init_adapters(config.adapters, 0);
  const std::size_t pipeline = enumerate(model.pipeline.tensors());
  const std::size_t core = enumerate(model.core.tensors());
  const std::size_t trainable = adapters.flatten().size();
  const bool exact = pipeline + trainable == r.client_held_params && core == r.server_held_params &&
                     trainable == r.upload_adapter_params && pipeline + core + trainable == r.total_params;

  std::printf("strategy                  %s\n", std::string(fednano::strategy_name(config.strategy)).c_str());
  std::printf("upload adapter params     %zu\n", r.upload_adapter_params);
  std::printf("upload fisher params      %zu\n", r.upload_fisher_params);
  std::printf("upload total params       %zu\n", r.upload_total_params);
  std::printf("upload bytes              %zu\n", r.upload_bytes);
  std::printf("client-held params        %zu\n", r.client_held_params);
  std::printf("server-held params        %zu\n", r.server_held_params);
  std::printf("total params              %zu\n", r.total_params);
  std::printf("upload fraction           %.6f%%\n", 100.0 * r.upload_fraction);
  std::printf("upload fraction w/ fisher %.6f%%\n", 100.0 * r.upload_with_fisher_fraction);
  std::printf("client fraction           %.4f%%\n", 100.0 * r.client_fraction);
  std::printf("client storage reduction  %.4f%%\n", 100.0 * r.storage_reduction);
  std::printf("enumeration check         %s\n", exact ? "match" : "MISMATCH");
  return exact ? kExitOk : kExitRunFailure;
}

int cmd_partition(const fednano::ExperimentSpec& spec, const std::string& out_path) {
  const std::uint64_t seed = spec.seeds.front();
  const fednano::PreparedRun prepared = fednano::prepare_run(spec, seed);
  std::vector<std::vector<fednano::Sample>> parts;
  for (const auto& d : prepared.datasets) {
    std::vector<fednano::Sample> all = d.train;
    all.insert(all.end(), d.val.begin(), d.val.end());
    all.insert(all.end(), d.test.begin(), d.test.end());
    parts.push_back(std::move(all));
  }
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw fednano::Error("cannot write " + out_path);
    out = &file;
  }
  fednano::write_dataset(*out, prepared.datasets);
  std::fprintf(stderr, "seed %llu: %zu clients, mean TV to pooled = %.4f\n",
               static_cast<unsigned long long>(seed), prepared.datasets.size(),
               fednano::partition_heterogeneity(parts, spec.task.categories));
  for (const auto& d : prepared.datasets) {
    std::fprintf(stderr, "  client %llu: train %zu val %zu test %zu\n",
                 static_cast<unsigned long long>(d.client_id), d.train.size(), d.val.size(), d.test.size());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fednano: federated adapter tuning with Fisher merging"};
  app.require_subcommand(1);

  std::string config_path;
  std::string dir;
  std::string out_path;
  Overrides run_overrides;
  Overrides partition_overrides;
  Overrides account_overrides;
  Overrides defaults_overrides;

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required();
  run_overrides.attach(run);

  CLI::App* report = app.add_subcommand("report", "print the comparison table for an output directory");
  report->add_option("dir", dir, "output directory of a previous run")->required();

  CLI::App* partition = app.add_subcommand("partition", "write the partitioned dataset for the first seed");
  partition->add_option("config", config_path, "config file")->required();
  partition->add_option("-o,--out", out_path, "output file ('-' for stdout)");
  partition_overrides.attach(partition);

  CLI::App* account = app.add_subcommand("account", "print parameter and traffic accounting");
  account->add_option("config", config_path, "config file")->required();
  account_overrides.attach(account);

  CLI::App* defaults = app.add_subcommand("defaults", "print a config file with every default value");
  defaults_overrides.attach(defaults);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(load(config_path, run_overrides));
    if (*partition) return cmd_partition(load(config_path, partition_overrides), out_path);
    if (*account) return cmd_account(load(config_path, account_overrides));
    if (*report) {
      std::cout << fednano::emit_report(dir);
      return kExitOk;
    }
    if (*defaults) {
      std::cout << fednano::emit_config(fednano::parse_config_text("", defaults_overrides.collect()));
      return kExitOk;
    }
  } catch (const fednano::ConfigError& e) {
    std::cerr << "fednano: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "fednano: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}
