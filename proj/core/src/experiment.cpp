// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "fednano/rng.hpp"

namespace fednano {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(',', start);
    std::string item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Field-level parse failure; the caller attaches the key name.
struct BadValue {
  std::string reason;
};

std::uint64_t to_u64(std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw BadValue{"expected a nonnegative integer, got '" + t + "'"};
  }
  return v;
}

std::size_t to_size(std::string_view text) { return static_cast<std::size_t>(to_u64(text)); }

double to_double(std::string_view text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw BadValue{"expected a finite number, got '" + t + "'"};
  }
  return v;
}

bool to_bool(std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw BadValue{"expected true or false, got '" + t + "'"};
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view text, F convert) {
  std::vector<T> out;
  for (const std::string& item : split_list(text)) out.push_back(convert(item));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += format(items[i]);
  }
  return out;
}

std::string size_str(std::size_t v) { return std::to_string(v); }

struct KeyDef {
  std::string key;
  std::function<std::string(const ExperimentSpec&)> get;
  std::function<void(ExperimentSpec&, std::string_view)> set;
};

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = [] {
    std::vector<KeyDef> d;
    auto size_key = [&](std::string key, auto member) {
      d.push_back({key, [member](const ExperimentSpec& s) { return std::to_string(member(const_cast<ExperimentSpec&>(s))); },
                   [member](ExperimentSpec& s, std::string_view v) { member(s) = to_size(v); }});
    };
    auto double_key = [&](std::string key, auto member) {
      d.push_back({key, [member](const ExperimentSpec& s) { return format_double(member(const_cast<ExperimentSpec&>(s))); },
                   [member](ExperimentSpec& s, std::string_view v) { member(s) = to_double(v); }});
    };
    auto bool_key = [&](std::string key, auto member) {
      d.push_back({key, [member](const ExperimentSpec& s) { return std::string(member(const_cast<ExperimentSpec&>(s)) ? "true" : "false"); },
                   [member](ExperimentSpec& s, std::string_view v) { member(s) = to_bool(v); }});
    };

    // task / model
    size_key("categories", [](ExperimentSpec& s) -> std::size_t& { return s.task.categories; });
    size_key("skills", [](ExperimentSpec& s) -> std::size_t& { return s.task.skills; });
    size_key("samples", [](ExperimentSpec& s) -> std::size_t& { return s.task.samples; });
    size_key("question_len", [](ExperimentSpec& s) -> std::size_t& { return s.task.question_len; });
    double_key("noise_sigma", [](ExperimentSpec& s) -> double& { return s.task.noise_sigma; });
    double_key("label_noise", [](ExperimentSpec& s) -> double& { return s.task.label_noise; });
    size_key("d_img", [](ExperimentSpec& s) -> std::size_t& { return s.dims.d_img; });
    size_key("d_emb", [](ExperimentSpec& s) -> std::size_t& { return s.dims.d_emb; });
    size_key("d_model", [](ExperimentSpec& s) -> std::size_t& { return s.dims.d_model; });
    size_key("d_hidden", [](ExperimentSpec& s) -> std::size_t& { return s.dims.d_hidden; });
    size_key("vocab", [](ExperimentSpec& s) -> std::size_t& { return s.dims.vocab; });
    size_key("answers", [](ExperimentSpec& s) -> std::size_t& { return s.dims.n_answers; });
    // partition
    size_key("clients", [](ExperimentSpec& s) -> std::size_t& { return s.clients; });
    double_key("alpha", [](ExperimentSpec& s) -> double& { return s.alpha; });
    double_key("split_train", [](ExperimentSpec& s) -> double& { return s.splits.train; });
    double_key("split_val", [](ExperimentSpec& s) -> double& { return s.splits.val; });
    double_key("split_test", [](ExperimentSpec& s) -> double& { return s.splits.test; });
    // federation
    size_key("rounds", [](ExperimentSpec& s) -> std::size_t& { return s.federation.rounds; });
    size_key("local_steps", [](ExperimentSpec& s) -> std::size_t& { return s.federation.local_steps; });
    size_key("batch_size", [](ExperimentSpec& s) -> std::size_t& { return s.federation.batch_size; });
    size_key("rank", [](ExperimentSpec& s) -> std::size_t& { return s.federation.adapters.rank; });
    bool_key("image_adapter", [](ExperimentSpec& s) -> bool& { return s.federation.adapters.image_enabled; });
    bool_key("text_adapter", [](ExperimentSpec& s) -> bool& { return s.federation.adapters.text_enabled; });
    double_key("learning_rate", [](ExperimentSpec& s) -> double& { return s.federation.learning_rate; });
    double_key("momentum", [](ExperimentSpec& s) -> double& { return s.federation.momentum; });
    d.push_back({"strategy",
                 [](const ExperimentSpec& s) {
                   return join(s.strategies, [](Strategy x) { return std::string(strategy_name(x)); });
                 },
                 [](ExperimentSpec& s, std::string_view v) {
                   try {
                     s.strategies = to_list<Strategy>(v, [](const std::string& x) { return parse_strategy(x); });
                   } catch (const InvalidArgument& e) {
                     throw BadValue{e.what()};
                   }
                 }});
    double_key("prox_mu", [](ExperimentSpec& s) -> double& { return s.federation.prox_mu; });
    double_key("fisher_epsilon", [](ExperimentSpec& s) -> double& { return s.federation.fisher_epsilon; });
    d.push_back({"seeds", [](const ExperimentSpec& s) { return join(s.seeds, [](std::uint64_t x) { return std::to_string(x); }); },
                 [](ExperimentSpec& s, std::string_view v) { s.seeds = to_list<std::uint64_t>(v, to_u64); }});
    size_key("eval_every", [](ExperimentSpec& s) -> std::size_t& { return s.federation.eval_every; });
    size_key("threads", [](ExperimentSpec& s) -> std::size_t& { return s.federation.threads; });
    // sweeps
    d.push_back({"sweep_rank", [](const ExperimentSpec& s) { return join(s.sweep_rank, size_str); },
                 [](ExperimentSpec& s, std::string_view v) { s.sweep_rank = to_list<std::size_t>(v, to_size); }});
    d.push_back({"sweep_rounds", [](const ExperimentSpec& s) { return join(s.sweep_rounds, size_str); },
                 [](ExperimentSpec& s, std::string_view v) { s.sweep_rounds = to_list<std::size_t>(v, to_size); }});
    size_key("total_local_steps", [](ExperimentSpec& s) -> std::size_t& { return s.total_local_steps; });
    d.push_back({"output_dir", [](const ExperimentSpec& s) { return s.output_dir.string(); },
                 [](ExperimentSpec& s, std::string_view v) {
                   const std::string t = trim(v);
                   if (t.empty()) throw BadValue{"must not be empty"};
                   s.output_dir = t;
                 }});
    return d;
  }();
  return defs;
}

// Collects (key, reason) pairs for the cross-field checks after parsing.
void validate_spec(ExperimentSpec& spec, std::vector<std::pair<std::string, std::string>>& problems) {
  auto bad = [&](const std::string& key, const std::string& why) { problems.emplace_back(key, why); };
  // Shared dims live in one place; mirror them into the task and adapters.
  spec.task.d_img = spec.dims.d_img;
  spec.task.vocab = spec.dims.vocab;
  spec.task.n_answers = spec.dims.n_answers;
  spec.federation.adapters.d_model = spec.dims.d_model;
  spec.federation.clients = spec.clients;

  for (const char* key : {"categories", "skills", "samples", "question_len", "d_img", "d_emb", "d_model",
                          "d_hidden", "vocab", "answers", "clients", "batch_size", "threads"}) {
    for (const KeyDef& def : key_defs()) {
      if (def.key == key && def.get(spec) == "0") bad(key, "must be >= 1");
    }
  }
  if (!(spec.alpha > 0.0)) bad("alpha", "Dirichlet concentration must be > 0");
  if (spec.task.noise_sigma < 0.0) bad("noise_sigma", "must be >= 0");
  if (spec.task.label_noise < 0.0 || spec.task.label_noise > 1.0) bad("label_noise", "must lie in [0, 1]");
  for (auto [key, v] : {std::pair{"split_train", spec.splits.train}, std::pair{"split_val", spec.splits.val},
                        std::pair{"split_test", spec.splits.test}}) {
    if (!(v > 0.0)) bad(key, "must be > 0");
  }
  if (std::abs(spec.splits.train + spec.splits.val + spec.splits.test - 1.0) > 1e-9) {
    bad("split_train", "split ratios must sum to 1");
  }
  const std::size_t rank = spec.federation.adapters.rank;
  if (rank < 1 || rank > spec.dims.d_model) bad("rank", "must lie in [1, d_model]");
  if (!spec.federation.adapters.image_enabled && !spec.federation.adapters.text_enabled) {
    bad("image_adapter", "at least one of image_adapter/text_adapter must be true");
  }
  if (!(spec.federation.learning_rate > 0.0)) bad("learning_rate", "must be > 0");
  if (!(spec.federation.momentum >= 0.0 && spec.federation.momentum < 1.0)) bad("momentum", "must lie in [0, 1)");
  if (!(spec.federation.prox_mu >= 0.0)) bad("prox_mu", "must be >= 0");
  if (!(spec.federation.fisher_epsilon > 0.0)) bad("fisher_epsilon", "must be > 0");
  if (spec.strategies.empty()) bad("strategy", "at least one strategy is required");
  if (spec.seeds.empty()) bad("seeds", "at least one seed is required");
  for (std::size_t r : spec.sweep_rank) {
    if (r < 1 || r > spec.dims.d_model) bad("sweep_rank", "every rank must lie in [1, d_model]");
  }
  if (!spec.sweep_rounds.empty()) {
    if (spec.total_local_steps == 0) bad("total_local_steps", "required by sweep_rounds");
    for (std::size_t r : spec.sweep_rounds) {
      if (r < 1 || r > spec.total_local_steps) {
        bad("sweep_rounds", "every round count must lie in [1, total_local_steps]");
      }
    }
  }
}

}  // namespace

bool ExperimentSpec::operator==(const ExperimentSpec& o) const { return emit_config(*this) == emit_config(o); }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeyDef& d : key_defs()) k.push_back(d.key);
    return k;
  }();
  return keys;
}

ExperimentSpec parse_config_text(std::string_view text, const ConfigOverrides& overrides) {
  ExperimentSpec spec;
  std::vector<std::pair<std::string, std::string>> problems;
  std::map<std::string, std::string, std::less<>> values;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      problems.emplace_back("line " + std::to_string(line_no), "expected 'key = value'");
      continue;
    }
    values[trim(std::string_view(body).substr(0, eq))] = trim(std::string_view(body).substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) values[k] = v;

  for (const auto& [key, value] : values) {
    auto it = std::find_if(key_defs().begin(), key_defs().end(), [&](const KeyDef& d) { return d.key == key; });
    if (it == key_defs().end()) {
      problems.emplace_back(key, "unknown key");
      continue;
    }
    try {
      it->set(spec, value);
    } catch (const BadValue& e) {
      problems.emplace_back(key, e.reason);
    }
  }
  validate_spec(spec, problems);

  if (!problems.empty()) {
    std::string what = "invalid configuration:";
    std::vector<std::string> keys;
    for (const auto& [key, why] : problems) {
      what += "\n  " + key + ": " + why;
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    throw ConfigError(what, std::move(keys));
  }
  return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string(), {"<file>"});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), overrides);
}

std::string emit_config(const ExperimentSpec& spec) {
  std::string out = "# fednano experiment config\n";
  for (const KeyDef& d : key_defs()) out += d.key + " = " + d.get(spec) + "\n";
  return out;
}

PreparedRun prepare_run(const ExperimentSpec& spec, std::uint64_t seed) {
  PreparedRun run;
  run.model = init_frozen(derive_seed(seed, "model"), spec.dims);
  const std::vector<Sample> samples = generate_synthetic_task(spec.task, derive_seed(seed, "task"));
  const auto parts = dirichlet_partition(samples, spec.clients, spec.alpha, derive_seed(seed, "partition"));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    run.datasets.push_back(split_train_val_test(parts[k], spec.splits, derive_seed(seed, "split"), k));
  }
  return run;
}

std::vector<RunVariant> expand_variants(const ExperimentSpec& spec) {
  std::vector<RunVariant> variants;
  for (Strategy strategy : spec.strategies) {
    FederationConfig base = spec.federation;
    base.strategy = strategy;
    const std::string name(strategy_name(strategy));
    if (spec.sweep_rank.empty() && spec.sweep_rounds.empty()) {
      variants.push_back({name, "", 0, base});
    }
    for (std::size_t rank : spec.sweep_rank) {
      FederationConfig c = base;
      c.adapters.rank = rank;
      variants.push_back({name + "@rank=" + std::to_string(rank), "rank", rank, c});
    }
    for (std::size_t rounds : spec.sweep_rounds) {
      FederationConfig c = base;
      c.rounds = rounds;
      c.local_steps = spec.total_local_steps / rounds;
      variants.push_back({name + "@rounds=" + std::to_string(rounds), "rounds", rounds, c});
    }
  }
  return variants;
}

std::string rounds_csv_header(std::size_t clients) {
  std::string h = "round";
  for (std::size_t k = 1; k <= clients; ++k) h += ",acc_c" + std::to_string(k);
  h += ",acc_avg,train_loss,upload_params,upload_fisher_params,upload_bytes,forward_passes,"
       "backward_passes,global_checksum";
  return h;
}

std::string rounds_csv(const RoundHistory& history, std::size_t clients) {
  std::ostringstream out;
  out << "# fednano-rounds v1\n" << rounds_csv_header(clients) << '\n';
  char buf[64];
  for (const RoundRecord& r : history.rounds) {
    out << r.round;
    for (std::size_t k = 0; k < clients; ++k) {
      out << ',';
      if (r.evaluated && k < r.clients.size() && r.clients[k].test_size > 0) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.clients[k].test_accuracy);
        out << buf;
      }
    }
    out << ',';
    if (r.evaluated) {
      std::snprintf(buf, sizeof(buf), "%.6f", r.average_accuracy);
      out << buf;
    }
    double loss = 0.0;
    for (const ClientRoundStats& s : r.clients) loss += s.train_loss;
    loss /= static_cast<double>(std::max<std::size_t>(1, r.clients.size()));
    std::snprintf(buf, sizeof(buf), "%.6f", loss);
    out << ',' << buf << ',' << r.upload_params << ',' << r.upload_fisher_params << ',' << r.upload_bytes
        << ',' << r.passes.forward << ',' << r.passes.backward << ',';
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(r.global_checksum));
    out << buf << '\n';
  }
  return out.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult result;
  const std::filesystem::path runs_dir = spec.output_dir / "runs";
  std::filesystem::create_directories(runs_dir);

  const std::vector<RunVariant> variants = expand_variants(spec);
  std::vector<SummaryRow> rows;
  for (const RunVariant& v : variants) {
    SummaryRow row;
    row.label = v.label;
    row.sweep = v.sweep;
    row.sweep_value = v.sweep_value;
    row.strategy = std::string(strategy_name(v.config.strategy));
    row.upload_params = v.config.adapters.flat_size() *
                        (strategy_uploads_fisher(v.config.strategy) ? 2 : 1);
    rows.push_back(std::move(row));
  }
  const std::filesystem::path marker = spec.output_dir / "INCOMPLETE";
  std::filesystem::remove(marker);
  for (std::uint64_t seed : spec.seeds) {
    // Every variant of a seed shares data and frozen weights, so strategies are paired.
    const PreparedRun prepared = prepare_run(spec, seed);
    for (std::size_t i = 0; i < variants.size(); ++i) {
      FederationConfig config = variants[i].config;
      config.seed = seed;
      const std::string run_name = variants[i].label + "__seed" + std::to_string(seed);
      RoundHistory history;
      try {
        history = run_federation(config, prepared.model, prepared.datasets);
      } catch (const std::exception& e) {
        write_text(marker, run_name + ": " + e.what() + "\n");
        throw Error("run " + run_name + " failed: " + e.what());
      }
      const std::filesystem::path file = runs_dir / (run_name + ".csv");
      write_text(file, rounds_csv(history, spec.clients));
      result.run_files.push_back(file);
      rows[i].final_accuracy.push_back(history.rounds.empty() ? 0.0 : history.rounds.back().average_accuracy);
    }
  }

  std::ostringstream csv;
  csv << "# fednano-summary v1\n"
         "label,sweep,sweep_value,strategy,seeds,final_avg_mean,final_avg_std,final_avg_min,"
         "final_avg_max,upload_params\n";
  char buf[160];
  for (const SummaryRow& r : rows) {
    const auto [mn, mx] = std::minmax_element(r.final_accuracy.begin(), r.final_accuracy.end());
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f", mean_of(r.final_accuracy),
                  stddev_of(r.final_accuracy), *mn, *mx);
    csv << r.label << ',' << r.sweep << ',' << (r.sweep.empty() ? std::string() : std::to_string(r.sweep_value))
        << ',' << r.strategy << ',' << r.final_accuracy.size() << ',' << buf << ',' << r.upload_params << '\n';
  }
  result.summary_csv = spec.output_dir / "summary.csv";
  write_text(result.summary_csv, csv.str());
  result.summary_txt = spec.output_dir / "summary.txt";
  write_text(result.summary_txt, emit_report(spec.output_dir));
  result.summary = std::move(rows);
  return result;
}

std::string emit_report(const std::filesystem::path& dir) {
  std::filesystem::path runs = dir / "runs";
  if (!std::filesystem::is_directory(runs)) runs = dir;
  if (!std::filesystem::is_directory(runs)) throw Error("report: no such directory " + dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(runs)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
        entry.path().filename().string().find("__seed") != std::string::npos) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("report: no rounds CSV files in " + runs.string());

  struct Group {
    std::vector<std::vector<double>> per_client;  // [seed][client]
    std::vector<double> avg;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> order;
  std::size_t clients = 0;

  for (const auto& file : files) {
    auto fail = [&](const std::string& why) -> FormatError {
      return FormatError("report: malformed history " + file.string() + ": " + why);
    };
    std::ifstream in(file);
    std::string line;
    if (!std::getline(in, line) || line != "# fednano-rounds v1") throw fail("missing schema line");
    if (!std::getline(in, line)) throw fail("missing header");
    const std::vector<std::string> header = split_list(line);
    std::size_t k = 0;
    while (k + 1 < header.size() && header[k + 1] == "acc_c" + std::to_string(k + 1)) ++k;
    if (k == 0 || line != rounds_csv_header(k)) throw fail("unexpected header");
    if (clients == 0) clients = k;
    if (clients != k) throw fail("client count differs from other histories");

    std::vector<std::string> last;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::size_t start = 0;
      for (;;) {
        const std::size_t pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
      if (cells.size() != header.size()) throw fail("row has " + std::to_string(cells.size()) + " cells");
      if (!cells[k + 1].empty()) last = std::move(cells);
    }
    if (last.empty()) throw fail("no evaluated round");
    std::vector<double> accs;
    try {
      for (std::size_t c = 1; c <= k; ++c) accs.push_back(last[c].empty() ? std::nan("") : to_double(last[c]));
      const std::string stem = file.stem().string();
      const std::string label = stem.substr(0, stem.find("__seed"));
      if (!groups.count(label)) order.push_back(label);
      Group& g = groups[label];
      g.per_client.push_back(accs);
      g.avg.push_back(to_double(last[k + 1]));
    } catch (const BadValue& e) {
      throw fail(e.reason);
    }
  }

  std::size_t label_width = 8;
  for (const auto& label : order) label_width = std::max(label_width, label.size());

  std::vector<double> avg_pct;
  for (const auto& label : order) avg_pct.push_back(std::round(mean_of(groups[label].avg) * 10000.0) / 100.0);
  const double best = *std::max_element(avg_pct.begin(), avg_pct.end());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "strategy";
  for (std::size_t c = 1; c <= clients; ++c) out << std::right << std::setw(8) << ("C" + std::to_string(c));
  out << std::setw(8) << "Avg" << '\n';
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Group& g = groups[order[i]];
    out << std::left << std::setw(static_cast<int>(label_width)) << order[i] << std::right;
    for (std::size_t c = 0; c < clients; ++c) {
      std::vector<double> vals;
      for (const auto& seed_row : g.per_client) {
        if (!std::isnan(seed_row[c])) vals.push_back(seed_row[c]);
      }
      if (vals.empty()) {
        out << std::setw(8) << "-";
      } else {
        out << std::setw(8) << std::fixed << std::setprecision(2) << mean_of(vals) * 100.0;
      }
    }
    out << std::setw(8) << std::fixed << std::setprecision(2) << avg_pct[i];
    if (avg_pct[i] == best) out << " *";
    out << '\n';
  }
  return out.str();
}

}  // namespace fednano
