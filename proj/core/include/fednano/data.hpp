// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fednano/sample.hpp"

namespace fednano {

/// Parameters of the synthetic multimodal classification task.
///
/// Each category c has a mean image vector mu_c; each skill s has a fixed
/// question template. The answer is a seeded lookup table over (c, s), so a
/// model must combine both modalities to solve it.
struct TaskSpec {
  std::size_t categories = 10;
  std::size_t skills = 5;
  std::size_t samples = 10000;
  std::size_t d_img = 16;
  std::size_t vocab = 32;
  std::size_t question_len = 8;
  std::size_t n_answers = 10;
  double noise_sigma = 0.5;
  double label_noise = 0.05;

  void validate() const;
  bool operator==(const TaskSpec&) const = default;
};

std::vector<Sample> generate_synthetic_task(const TaskSpec& spec, std::uint64_t seed);

/// Question template of every skill, as generated for `seed`.
std::vector<std::vector<std::uint32_t>> skill_templates(const TaskSpec& spec, std::uint64_t seed);
/// answer_table[c][s] before label noise.
std::vector<std::vector<std::uint32_t>> answer_table(const TaskSpec& spec, std::uint64_t seed);

/// Label-skew partition: per category c, p_c ~ Dirichlet(alpha * 1_K), and
/// each sample of c goes to client k with probability p_c[k]. Any client
/// left empty then takes the last sample of the currently largest client.
/// Samples keep their input order within each client.
std::vector<std::vector<Sample>> dirichlet_partition(std::span<const Sample> samples,
                                                     std::size_t clients, double alpha,
                                                     std::uint64_t seed);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const;
  bool operator==(const SplitRatios&) const = default;
};

struct ClientDataset {
  std::uint64_t client_id = 0;
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;

  std::size_t size() const { return train.size() + val.size() + test.size(); }
};

/// Deterministic shuffled split. val and test get round(n * ratio) samples,
/// train the rest; with n >= 3 every split is guaranteed nonempty, with n < 3
/// everything goes to train.
ClientDataset split_train_val_test(std::span<const Sample> samples, const SplitRatios& ratios,
                                   std::uint64_t seed, std::uint64_t client_id = 0);

/// Normalized category histogram of a sample set.
std::vector<double> category_distribution(std::span<const Sample> samples, std::size_t categories);
double total_variation(std::span<const double> p, std::span<const double> q);
/// Mean over clients of TV(client category distribution, pooled distribution).
double partition_heterogeneity(const std::vector<std::vector<Sample>>& parts, std::size_t categories);

/// Line-delimited fixture: a "# fednano-dataset v1" header, then one
/// tab-separated record per sample:
///   client  split  id  category  answer  tok,tok,...  f,f,...
/// Floats are written with 17 significant digits so they read back exactly.
void write_dataset(std::ostream& out, std::span<const ClientDataset> clients);
std::vector<ClientDataset> read_dataset(std::istream& in);

}  // namespace fednano
