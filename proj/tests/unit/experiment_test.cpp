// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fednano/experiment.hpp"

namespace fednano {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_lines(const std::string& text, int n) {
  std::size_t pos = 0;
  for (int i = 0; i < n && pos != std::string::npos; ++i) {
    pos = text.find('\n', pos);
    if (pos != std::string::npos) ++pos;
  }
  return text.substr(0, pos);
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("fednano_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Small enough for unit tests: ~0.1 s per run.
std::string tiny_config(const fs::path& out) {
  return "samples = 300\nd_hidden = 24\nclients = 3\nrounds = 2\nlocal_steps = 4\nrank = 2\n"
         "output_dir = " + out.string() + "\n";
}

void write_history(const fs::path& dir, const std::string& label, std::uint64_t seed, std::size_t k,
                   const std::vector<double>& accs, double avg) {
  fs::create_directories(dir);
  std::ofstream out(dir / (label + "__seed" + std::to_string(seed) + ".csv"));
  out << "# fednano-rounds v1\n" << rounds_csv_header(k) << "\n1";
  for (double a : accs) out << ',' << a;
  out << ',' << avg << ",1.0,10,0,128,5,5,00000000000000aa\n";
}

TEST(Config, MinimalConfigGetsDefaults) {
  const ExperimentSpec spec = parse_config_text("strategy = fedavg\n");
  EXPECT_EQ(spec.strategies, std::vector<Strategy>{Strategy::kFedAvg});
  ExperimentSpec defaults;
  defaults.strategies = {Strategy::kFedAvg};
  EXPECT_EQ(emit_config(spec), emit_config(defaults));
  EXPECT_EQ(spec.clients, 5u);
  EXPECT_EQ(spec.alpha, 0.1);
  EXPECT_EQ(spec.federation.rounds, 10u);
  EXPECT_EQ(spec.task.samples, 10000u);
}

TEST(Config, CommentsWhitespaceAndLists) {
  const ExperimentSpec spec = parse_config_text(
      "# comment\n\n  strategy = fedavg , fednano_ef   # trailing\nseeds=3,1,2\nimage_adapter = false\n");
  EXPECT_EQ(spec.strategies, (std::vector<Strategy>{Strategy::kFedAvg, Strategy::kFedNanoEF}));
  EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 1, 2}));
  EXPECT_FALSE(spec.federation.adapters.image_enabled);
}

TEST(Config, ZeroAlphaRejectedWithKeyName) {
  try {
    (void)parse_config_text("alpha = 0\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.keys(), std::vector<std::string>{"alpha"});
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
}

TEST(Config, EveryOffendingKeyIsListed) {
  try {
    (void)parse_config_text("colour = blue\nrank = 99\nlearning_rate = fast\nstrategy = fedsgd\nseeds =\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    std::vector<std::string> keys = e.keys();
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, (std::vector<std::string>{"colour", "learning_rate", "rank", "seeds", "strategy"}));
  }
}

TEST(Config, MalformedLineRejected) {
  EXPECT_THROW((void)parse_config_text("rounds 10\n"), ConfigError);
}

TEST(Config, OverridesWin) {
  const ExperimentSpec spec = parse_config_text("rounds = 3\n", {{"rounds", "7"}, {"alpha", "5"}});
  EXPECT_EQ(spec.federation.rounds, 7u);
  EXPECT_EQ(spec.alpha, 5.0);
  EXPECT_THROW((void)parse_config_text("", {{"nonsense", "1"}}), ConfigError);
}

TEST(Config, EmitThenParseIsIdentity) {
  const ExperimentSpec defaults = parse_config_text("");
  EXPECT_EQ(parse_config_text(emit_config(defaults)), defaults);

  ExperimentSpec custom = parse_config_text(
      "strategy = fedprox, fednano\nseeds = 4, 9\nlearning_rate = 0.123456789012345678\n"
      "alpha = 0.3\nsweep_rank = 2, 16\ntext_adapter = false\noutput_dir = some/where\n");
  const std::string text = emit_config(custom);
  EXPECT_EQ(parse_config_text(text), custom);
  EXPECT_EQ(emit_config(parse_config_text(text)), text);
  EXPECT_EQ(parse_config_text(text).federation.learning_rate, 0.123456789012345678);
}

TEST(Config, EveryKeyIsEmitted) {
  const std::string text = emit_config(ExperimentSpec{});
  for (const std::string& key : config_keys()) {
    EXPECT_NE(text.find("\n" + key + " = "), std::string::npos) << key;
  }
}

TEST(Config, SweepsRequireConsistentSettings) {
  EXPECT_THROW((void)parse_config_text("sweep_rounds = 2, 5\n"), ConfigError);
  EXPECT_THROW((void)parse_config_text("sweep_rank = 0\n"), ConfigError);
  EXPECT_NO_THROW((void)parse_config_text("sweep_rounds = 2, 5\ntotal_local_steps = 100\n"));
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW((void)parse_config("/nonexistent/fednano.conf"), ConfigError);
}

TEST(Variants, RankSweepHasOneRowPerRank) {
  const ExperimentSpec spec = parse_config_text("strategy = fednano\nsweep_rank = 2, 4, 8, 16\n");
  const auto v = expand_variants(spec);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].label, "fednano@rank=2");
  EXPECT_EQ(v[3].config.adapters.rank, 16u);
}

TEST(Variants, FrequencySweepKeepsTotalSteps) {
  const ExperimentSpec spec =
      parse_config_text("strategy = fedavg\nsweep_rounds = 2, 4, 8\ntotal_local_steps = 48\n");
  const auto v = expand_variants(spec);
  ASSERT_EQ(v.size(), 3u);
  for (const RunVariant& x : v) EXPECT_EQ(x.config.rounds * x.config.local_steps, 48u) << x.label;
  EXPECT_EQ(v[1].label, "fedavg@rounds=4");
}

TEST(RoundsCsv, HeaderMatchesGoldenFile) {
  const std::string golden = slurp(fs::path(FEDNANO_GOLDEN_DIR) / "rounds_header_k5.csv");
  EXPECT_EQ(first_lines(rounds_csv(RoundHistory{}, 5), 2), golden);
}

TEST(RunExperiment, TwoStrategiesOneSeedWritesFilesAndTable) {
  TempDir dir("exp_two");
  const ExperimentSpec spec = parse_config_text(tiny_config(dir.path()) + "strategy = fedavg, fednano\n");
  const ExperimentResult result = run_experiment(spec);
  ASSERT_EQ(result.run_files.size(), 2u);
  for (const auto& f : result.run_files) EXPECT_TRUE(fs::exists(f)) << f;
  EXPECT_TRUE(fs::exists(dir.path() / "runs" / "fedavg__seed1.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "runs" / "fednano__seed1.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "INCOMPLETE"));

  const std::string summary = slurp(result.summary_csv);
  EXPECT_EQ(first_lines(summary, 2), slurp(fs::path(FEDNANO_GOLDEN_DIR) / "summary_header.csv"));
  EXPECT_NE(summary.find("\nfedavg,"), std::string::npos);
  EXPECT_NE(summary.find("\nfednano,"), std::string::npos);

  const std::string table = slurp(result.summary_txt);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_EQ(table, emit_report(dir.path()));

  const std::string csv = slurp(dir.path() / "runs" / "fednano__seed1.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // schema, header, 2 rounds
}

TEST(RunExperiment, RankSweepSummaryHasOneRowPerRank) {
  TempDir dir("exp_rank");
  const ExperimentSpec spec =
      parse_config_text(tiny_config(dir.path()) + "strategy = fednano\nsweep_rank = 1, 2, 4\nrounds = 1\n");
  const ExperimentResult result = run_experiment(spec);
  ASSERT_EQ(result.summary.size(), 3u);
  EXPECT_EQ(result.summary[2].sweep, "rank");
  EXPECT_EQ(result.summary[2].sweep_value, 4u);
  EXPECT_EQ(result.summary[2].upload_params, 2u * 2 * 2 * 4 * 32);
}

TEST(RunExperiment, OutputsAreByteIdenticalAcrossRuns) {
  TempDir a("exp_repro_a");
  TempDir b("exp_repro_b");
  const std::string common = "strategy = fedavg, fednano_ef\nseeds = 2, 3\n";
  const auto ra = run_experiment(parse_config_text(tiny_config(a.path()) + common));
  const auto rb = run_experiment(parse_config_text(tiny_config(b.path()) + common));
  ASSERT_EQ(ra.run_files.size(), rb.run_files.size());
  for (std::size_t i = 0; i < ra.run_files.size(); ++i) {
    EXPECT_EQ(slurp(ra.run_files[i]), slurp(rb.run_files[i])) << ra.run_files[i];
  }
  EXPECT_EQ(slurp(ra.summary_csv), slurp(rb.summary_csv));
}

TEST(Report, SingleStrategyOneRow) {
  TempDir dir("report_one");
  write_history(dir.path() / "runs", "fedavg", 1, 2, {0.5, 0.7}, 0.6);
  const std::string table = emit_report(dir.path());
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  EXPECT_NE(table.find("60.00 *"), std::string::npos) << table;
}

TEST(Report, FiveClientsGiveSixNumericColumns) {
  TempDir dir("report_k5");
  write_history(dir.path(), "fednano", 1, 5, {0.1, 0.2, 0.3, 0.4, 0.5}, 0.3);
  const std::string table = emit_report(dir.path());
  std::istringstream lines(table);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::istringstream cells(row);
  std::string cell;
  int numeric = 0;
  cells >> cell;  // label
  while (cells >> cell) {
    if (cell != "*") {
      (void)std::stod(cell);
      ++numeric;
    }
  }
  EXPECT_EQ(numeric, 6);
  EXPECT_NE(header.find("C5"), std::string::npos);
  EXPECT_NE(header.find("Avg"), std::string::npos);
}

TEST(Report, TiesAtPrintedPrecisionAreAllMarked) {
  TempDir dir("report_tie");
  write_history(dir.path(), "fedavg", 1, 2, {0.5, 0.7}, 0.60001);
  write_history(dir.path(), "fednano", 1, 2, {0.6, 0.6}, 0.59999);
  write_history(dir.path(), "fedprox", 1, 2, {0.1, 0.1}, 0.1);
  const std::string table = emit_report(dir.path());
  EXPECT_EQ(std::count(table.begin(), table.end(), '*'), 2) << table;
  EXPECT_EQ(table.find("fedprox"), table.rfind("fedprox"));
}

TEST(Report, AveragesOverSeeds) {
  TempDir dir("report_seeds");
  write_history(dir.path(), "fedavg", 1, 1, {0.4}, 0.4);
  write_history(dir.path(), "fedavg", 2, 1, {0.6}, 0.6);
  EXPECT_NE(emit_report(dir.path()).find("50.00"), std::string::npos);
}

TEST(Report, MalformedHistoryNamesFile) {
  TempDir dir("report_bad");
  fs::create_directories(dir.path() / "runs");
  std::ofstream(dir.path() / "runs" / "broken__seed1.csv") << "round,acc\n1,0.5\n";
  try {
    (void)emit_report(dir.path());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("broken__seed1.csv"), std::string::npos) << e.what();
  }
  TempDir empty("report_empty");
  EXPECT_THROW((void)emit_report(empty.path()), Error);
}

}  // namespace
}  // namespace fednano
