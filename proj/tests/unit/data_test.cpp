// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fednano/data.hpp"
#include "fednano/error.hpp"
#include "fednano/rng.hpp"

namespace fednano {
namespace {

// The seed streams used by the shipped experiment configs for seed 1.
constexpr std::uint64_t kRunSeed = 1;

std::vector<std::uint64_t> ids(const std::vector<Sample>& s) {
  std::vector<std::uint64_t> out;
  for (const Sample& x : s) out.push_back(x.id);
  return out;
}

TEST(SyntheticTask, DeterministicPerSeed) {
  TaskSpec spec;
  spec.samples = 500;
  EXPECT_EQ(generate_synthetic_task(spec, 3), generate_synthetic_task(spec, 3));
  EXPECT_NE(generate_synthetic_task(spec, 3), generate_synthetic_task(spec, 4));
}

TEST(SyntheticTask, SamplesAreWellFormed) {
  TaskSpec spec;
  spec.samples = 1000;
  for (const Sample& s : generate_synthetic_task(spec, 9)) {
    ASSERT_LT(s.category, spec.categories);
    ASSERT_LT(s.answer, spec.n_answers);
    ASSERT_EQ(s.image_features.size(), spec.d_img);
    ASSERT_EQ(s.question_tokens.size(), spec.question_len);
    for (auto t : s.question_tokens) ASSERT_LT(t, spec.vocab);
  }
}

TEST(SyntheticTask, NoiselessTaskIsALookup) {
  TaskSpec spec;
  spec.samples = 2000;
  spec.noise_sigma = 0.0;
  spec.label_noise = 0.0;
  const auto samples = generate_synthetic_task(spec, 5);
  const auto templates = skill_templates(spec, 5);
  const auto table = answer_table(spec, 5);
  std::map<std::uint32_t, std::vector<double>> image_of_category;
  std::size_t correct = 0;
  for (const Sample& s : samples) {
    // Features identify the category exactly; tokens identify the skill.
    auto [it, fresh] = image_of_category.emplace(s.category, s.image_features);
    if (!fresh) {
      ASSERT_EQ(it->second, s.image_features);
    }
    const auto skill = std::find(templates.begin(), templates.end(), s.question_tokens) - templates.begin();
    ASSERT_LT(static_cast<std::size_t>(skill), spec.skills);
    correct += table[s.category][skill] == s.answer ? 1 : 0;
  }
  EXPECT_EQ(correct, samples.size());
}

TEST(SyntheticTask, LabelNoiseRateIsRespected) {
  TaskSpec spec;
  spec.samples = 10000;
  const auto samples = generate_synthetic_task(spec, 5);
  const auto templates = skill_templates(spec, 5);
  const auto table = answer_table(spec, 5);
  std::size_t mismatched = 0;
  for (const Sample& s : samples) {
    const auto skill = std::find(templates.begin(), templates.end(), s.question_tokens) - templates.begin();
    mismatched += table[s.category][skill] != s.answer ? 1 : 0;
  }
  // A flipped label keeps its value with probability 1/n_answers: expect 4.5%.
  EXPECT_NEAR(static_cast<double>(mismatched) / spec.samples, 0.045, 0.01);
}

TEST(SyntheticTask, CategoryCountsNearUniformAtDefaultSeed) {
  TaskSpec spec;
  const auto samples = generate_synthetic_task(spec, derive_seed(kRunSeed, "task"));
  std::vector<std::size_t> counts(spec.categories, 0);
  for (const Sample& s : samples) ++counts[s.category];
  for (std::size_t c : counts) {
    EXPECT_GE(c, 950u);
    EXPECT_LE(c, 1050u);
  }
}

TEST(SyntheticTask, InvalidSpecRejected) {
  TaskSpec spec;
  spec.categories = 0;
  EXPECT_THROW((void)generate_synthetic_task(spec, 1), InvalidArgument);
  spec = {};
  spec.noise_sigma = -1;
  EXPECT_THROW((void)generate_synthetic_task(spec, 1), InvalidArgument);
}

TEST(Partition, SingleClientGetsEverything) {
  TaskSpec spec;
  spec.samples = 300;
  const auto samples = generate_synthetic_task(spec, 1);
  const auto parts = dirichlet_partition(samples, 1, 0.5, 2);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0], samples);
}

TEST(Partition, CompleteForManyConfigurations) {
  TaskSpec spec;
  spec.samples = 700;
  const auto samples = generate_synthetic_task(spec, 1);
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 1 + rng.below(12);
    const double alpha = std::exp(rng.uniform(-5, 5));
    const auto parts = dirichlet_partition(samples, k, alpha, rng.next_u64());
    ASSERT_EQ(parts.size(), k);
    std::vector<std::uint64_t> all;
    for (const auto& p : parts) {
      EXPECT_FALSE(p.empty());
      const auto i = ids(p);
      EXPECT_TRUE(std::is_sorted(i.begin(), i.end()));
      all.insert(all.end(), i.begin(), i.end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), samples.size());
    for (std::size_t n = 0; n < all.size(); ++n) ASSERT_EQ(all[n], n);
  }
}

TEST(Partition, EmptyClientGuard) {
  TaskSpec spec;
  spec.samples = 60;
  const auto parts = dirichlet_partition(generate_synthetic_task(spec, 1), 40, 0.01, 3);
  for (const auto& p : parts) EXPECT_FALSE(p.empty());
}

TEST(Partition, AlphaMustBePositive) {
  const std::vector<Sample> none;
  EXPECT_THROW((void)dirichlet_partition(none, 3, 0.0, 1), InvalidArgument);
  EXPECT_THROW((void)dirichlet_partition(none, 3, -1.0, 1), InvalidArgument);
  EXPECT_THROW((void)dirichlet_partition(none, 0, 1.0, 1), InvalidArgument);
}

TEST(Partition, LargeAlphaIsNearIid) {
  TaskSpec spec;
  const auto samples = generate_synthetic_task(spec, derive_seed(kRunSeed, "task"));
  const auto parts = dirichlet_partition(samples, 5, 100.0, derive_seed(kRunSeed, "partition"));
  const auto pooled = category_distribution(samples, spec.categories);
  for (const auto& p : parts) {
    EXPECT_LE(total_variation(category_distribution(p, spec.categories), pooled), 0.05);
  }
}

TEST(Partition, HeterogeneityDecreasesWithAlphaAtShippedSeeds) {
  TaskSpec spec;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto samples = generate_synthetic_task(spec, derive_seed(seed, "task"));
    const double skewed = partition_heterogeneity(
        dirichlet_partition(samples, 5, 0.1, derive_seed(seed, "partition")), spec.categories);
    const double mild = partition_heterogeneity(
        dirichlet_partition(samples, 5, 5.0, derive_seed(seed, "partition")), spec.categories);
    EXPECT_GT(skewed, mild) << "seed " << seed;
  }
}

TEST(TotalVariation, HandValues) {
  const std::vector<double> p{0.5, 0.5, 0.0};
  const std::vector<double> q{0.0, 0.5, 0.5};
  EXPECT_DOUBLE_EQ(total_variation(p, q), 0.5);
  EXPECT_DOUBLE_EQ(total_variation(p, p), 0.0);
  EXPECT_THROW((void)total_variation(p, std::vector<double>{1.0}), ShapeError);
}

TEST(Split, EightyTenTen) {
  TaskSpec spec;
  spec.samples = 100;
  const auto samples = generate_synthetic_task(spec, 1);
  const ClientDataset d = split_train_val_test(samples, {}, 4, 2);
  EXPECT_EQ(d.train.size(), 80u);
  EXPECT_EQ(d.val.size(), 10u);
  EXPECT_EQ(d.test.size(), 10u);
  EXPECT_EQ(d.client_id, 2u);
}

TEST(Split, DisjointAndDeterministic) {
  TaskSpec spec;
  spec.samples = 137;
  const auto samples = generate_synthetic_task(spec, 1);
  const ClientDataset a = split_train_val_test(samples, {0.7, 0.2, 0.1}, 4, 0);
  const ClientDataset b = split_train_val_test(samples, {0.7, 0.2, 0.1}, 4, 0);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  std::set<std::uint64_t> seen;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const Sample& s : *part) EXPECT_TRUE(seen.insert(s.id).second) << s.id;
  }
  EXPECT_EQ(seen.size(), samples.size());
  const ClientDataset other_client = split_train_val_test(samples, {0.7, 0.2, 0.1}, 4, 1);
  EXPECT_NE(ids(a.test), ids(other_client.test));
}

TEST(Split, SmallClients) {
  TaskSpec spec;
  spec.samples = 3;
  const auto three = generate_synthetic_task(spec, 1);
  const ClientDataset d3 = split_train_val_test(three, {}, 1);
  EXPECT_EQ(d3.train.size(), 1u);
  EXPECT_EQ(d3.val.size(), 1u);
  EXPECT_EQ(d3.test.size(), 1u);
  const ClientDataset d2 = split_train_val_test(std::span(three).first(2), {}, 1);
  EXPECT_EQ(d2.train.size(), 2u);
  EXPECT_TRUE(d2.test.empty());
}

TEST(Split, InvalidRatiosRejected) {
  const std::vector<Sample> none;
  EXPECT_THROW((void)split_train_val_test(none, {0.5, 0.5, 0.0}, 1), InvalidArgument);
  EXPECT_THROW((void)split_train_val_test(none, {0.8, 0.1, 0.2}, 1), InvalidArgument);
}

TEST(DatasetFixture, RoundTripsExactly) {
  TaskSpec spec;
  spec.samples = 200;
  const auto samples = generate_synthetic_task(spec, 8);
  const auto parts = dirichlet_partition(samples, 3, 0.5, 8);
  std::vector<ClientDataset> clients;
  for (std::size_t k = 0; k < parts.size(); ++k) clients.push_back(split_train_val_test(parts[k], {}, 8, k));
  std::stringstream buf;
  write_dataset(buf, clients);
  EXPECT_EQ(buf.str().rfind("# fednano-dataset v1\n", 0), 0u);
  const auto back = read_dataset(buf);
  ASSERT_EQ(back.size(), clients.size());
  for (std::size_t k = 0; k < clients.size(); ++k) {
    EXPECT_EQ(back[k].client_id, clients[k].client_id);
    EXPECT_EQ(back[k].train, clients[k].train);
    EXPECT_EQ(back[k].val, clients[k].val);
    EXPECT_EQ(back[k].test, clients[k].test);
  }
}

TEST(DatasetFixture, MalformedInputRejected) {
  std::stringstream no_header("0\ttrain\t1\t0\t0\t1,2\t0.5\n");
  EXPECT_THROW((void)read_dataset(no_header), FormatError);
  std::stringstream short_row("# fednano-dataset v1\n0\ttrain\t1\n");
  EXPECT_THROW((void)read_dataset(short_row), FormatError);
  std::stringstream bad_split("# fednano-dataset v1\n0\tdev\t1\t0\t0\t1,2\t0.5\n");
  EXPECT_THROW((void)read_dataset(bad_split), FormatError);
  std::stringstream bad_float("# fednano-dataset v1\n0\ttrain\t1\t0\t0\t1,2\t0.5x\n");
  EXPECT_THROW((void)read_dataset(bad_float), FormatError);
}

}  // namespace
}  // namespace fednano
