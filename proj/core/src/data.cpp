// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fednano/error.hpp"
#include "fednano/rng.hpp"

namespace fednano {

void TaskSpec::validate() const {
  if (categories < 1 || skills < 1 || samples < 1) {
    throw InvalidArgument("task needs at least one category, skill and sample");
  }
  if (d_img < 1 || vocab < 1 || question_len < 1 || n_answers < 1) {
    throw InvalidArgument("task dims must be positive");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw InvalidArgument("task noise sigma must be finite and nonnegative");
  }
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
    throw InvalidArgument("task label noise must lie in [0, 1]");
  }
}

std::vector<std::vector<std::uint32_t>> skill_templates(const TaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<std::vector<std::uint32_t>> templates(spec.skills);
  for (std::size_t s = 0; s < spec.skills; ++s) {
    Rng rng(derive_seed(seed, "task-template", {s}));
    for (std::size_t t = 0; t < spec.question_len; ++t) {
      templates[s].push_back(static_cast<std::uint32_t>(rng.below(spec.vocab)));
    }
  }
  return templates;
}

std::vector<std::vector<std::uint32_t>> answer_table(const TaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "task-answers"));
  std::vector<std::vector<std::uint32_t>> table(spec.categories,
                                                std::vector<std::uint32_t>(spec.skills));
  for (auto& row : table) {
    for (auto& a : row) a = static_cast<std::uint32_t>(rng.below(spec.n_answers));
  }
  return table;
}

std::vector<Sample> generate_synthetic_task(const TaskSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<std::vector<double>> means(spec.categories, std::vector<double>(spec.d_img));
  for (std::size_t c = 0; c < spec.categories; ++c) {
    Rng rng(derive_seed(seed, "task-mean", {c}));
    for (double& m : means[c]) m = rng.normal();
  }
  const auto templates = skill_templates(spec, seed);
  const auto table = answer_table(spec, seed);

  std::vector<Sample> samples(spec.samples);
  Rng rng(derive_seed(seed, "task-samples"));
  for (std::size_t i = 0; i < spec.samples; ++i) {
    Sample& s = samples[i];
    s.id = i;
    const std::size_t c = rng.below(spec.categories);
    const std::size_t k = rng.below(spec.skills);
    s.category = static_cast<std::uint32_t>(c);
    s.image_features.resize(spec.d_img);
    for (std::size_t d = 0; d < spec.d_img; ++d) {
      s.image_features[d] = means[c][d] + spec.noise_sigma * rng.normal();
    }
    s.question_tokens = templates[k];
    s.answer = table[c][k];
    // Always draw both numbers so the stream layout does not depend on rates.
    const double flip = rng.uniform();
    const auto replacement = static_cast<std::uint32_t>(rng.below(spec.n_answers));
    if (flip < spec.label_noise) s.answer = replacement;
  }
  return samples;
}

std::vector<std::vector<Sample>> dirichlet_partition(std::span<const Sample> samples,
                                                     std::size_t clients, double alpha,
                                                     std::uint64_t seed) {
  if (clients < 1) throw InvalidArgument("partition needs at least one client");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("Dirichlet alpha must be positive, got " + std::to_string(alpha));
  }
  std::map<std::uint32_t, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < samples.size(); ++i) by_category[samples[i].category].push_back(i);

  std::vector<std::vector<std::size_t>> assigned(clients);
  for (const auto& [category, members] : by_category) {
    Rng prior(derive_seed(seed, "dirichlet", {category}));
    const std::vector<double> p = prior.dirichlet(alpha, clients);
    Rng draw(derive_seed(seed, "assign", {category}));
    for (std::size_t idx : members) assigned[draw.categorical(p)].push_back(idx);
  }

  for (std::size_t k = 0; k < clients; ++k) {
    if (!assigned[k].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < clients; ++j) {
      if (assigned[j].size() > assigned[donor].size()) donor = j;
    }
    if (assigned[donor].size() < 2) break;  // fewer samples than clients
    assigned[k].push_back(assigned[donor].back());
    assigned[donor].pop_back();
  }

  std::vector<std::vector<Sample>> parts(clients);
  for (std::size_t k = 0; k < clients; ++k) {
    std::sort(assigned[k].begin(), assigned[k].end());
    parts[k].reserve(assigned[k].size());
    for (std::size_t idx : assigned[k]) parts[k].push_back(samples[idx]);
  }
  return parts;
}

void SplitRatios::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw InvalidArgument("split ratios must all be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

ClientDataset split_train_val_test(std::span<const Sample> samples, const SplitRatios& ratios,
                                   std::uint64_t seed, std::uint64_t client_id) {
  ratios.validate();
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split", {client_id}));
  rng.shuffle(order);

  const std::size_t n = samples.size();
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  if (n >= 3) {
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * ratios.val)));
    n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * ratios.test)));
    while (n_val + n_test >= n) {
      if (n_val >= n_test && n_val > 1) {
        --n_val;
      } else {
        --n_test;
      }
    }
  }
  ClientDataset ds;
  ds.client_id = client_id;
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = samples[order[i]];
    if (i < n_val) {
      ds.val.push_back(s);
    } else if (i < n_val + n_test) {
      ds.test.push_back(s);
    } else {
      ds.train.push_back(s);
    }
  }
  return ds;
}

std::vector<double> category_distribution(std::span<const Sample> samples, std::size_t categories) {
  std::vector<double> dist(categories, 0.0);
  if (samples.empty()) return dist;
  for (const Sample& s : samples) {
    if (s.category >= categories) throw InvalidArgument("sample category out of range");
    dist[s.category] += 1.0;
  }
  for (double& d : dist) d /= static_cast<double>(samples.size());
  return dist;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("TV distance needs equal-length distributions");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

double partition_heterogeneity(const std::vector<std::vector<Sample>>& parts, std::size_t categories) {
  if (parts.empty()) throw InvalidArgument("heterogeneity of an empty partition");
  std::vector<Sample> pooled;
  for (const auto& part : parts) pooled.insert(pooled.end(), part.begin(), part.end());
  const std::vector<double> global = category_distribution(pooled, categories);
  double total = 0.0;
  for (const auto& part : parts) total += total_variation(category_distribution(part, categories), global);
  return total / static_cast<double>(parts.size());
}

namespace {

constexpr const char* kDatasetHeader = "# fednano-dataset v1";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("dataset line " + std::to_string(line) + ": bad number '" +
                      std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void write_dataset(std::ostream& out, std::span<const ClientDataset> clients) {
  out << kDatasetHeader << '\n';
  auto emit = [&](std::uint64_t client, const char* split_name, const std::vector<Sample>& samples) {
    for (const Sample& s : samples) {
      out << client << '\t' << split_name << '\t' << s.id << '\t' << s.category << '\t' << s.answer
          << '\t';
      for (std::size_t i = 0; i < s.question_tokens.size(); ++i) {
        if (i) out << ',';
        out << s.question_tokens[i];
      }
      out << '\t';
      for (std::size_t i = 0; i < s.image_features.size(); ++i) {
        if (i) out << ',';
        out << format_double(s.image_features[i]);
      }
      out << '\n';
    }
  };
  for (const ClientDataset& c : clients) {
    emit(c.client_id, "train", c.train);
    emit(c.client_id, "val", c.val);
    emit(c.client_id, "test", c.test);
  }
}

std::vector<ClientDataset> read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDatasetHeader) {
    throw FormatError("dataset fixture must start with '" + std::string(kDatasetHeader) + "'");
  }
  std::map<std::uint64_t, ClientDataset> clients;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 7) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": expected 7 fields, got " +
                        std::to_string(fields.size()));
    }
    const auto client = parse_number<std::uint64_t>(fields[0], line_no);
    Sample s;
    s.id = parse_number<std::uint64_t>(fields[2], line_no);
    s.category = parse_number<std::uint32_t>(fields[3], line_no);
    s.answer = parse_number<std::uint32_t>(fields[4], line_no);
    for (std::string_view tok : split(fields[5], ',')) {
      s.question_tokens.push_back(parse_number<std::uint32_t>(tok, line_no));
    }
    for (std::string_view f : split(fields[6], ',')) {
      // from_chars for double is missing on older libstdc++; strtod is exact too.
      std::string text(f);
      char* end = nullptr;
      const double v = std::strtod(text.c_str(), &end);
      if (text.empty() || end != text.c_str() + text.size()) {
        throw FormatError("dataset line " + std::to_string(line_no) + ": bad feature '" + text + "'");
      }
      s.image_features.push_back(v);
    }
    ClientDataset& ds = clients[client];
    ds.client_id = client;
    if (fields[1] == "train") {
      ds.train.push_back(std::move(s));
    } else if (fields[1] == "val") {
      ds.val.push_back(std::move(s));
    } else if (fields[1] == "test") {
      ds.test.push_back(std::move(s));
    } else {
      throw FormatError("dataset line " + std::to_string(line_no) + ": unknown split '" +
                        std::string(fields[1]) + "'");
    }
  }
  std::vector<ClientDataset> out;
  for (auto& [id, ds] : clients) out.push_back(std::move(ds));
  return out;
}

}  // namespace fednano
