// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace fednano {

/// Child seed = splitmix64 fold of (parent, FNV-1a(tag), indices...).
///
/// Every random stream in the library is obtained this way from the global
/// seed, so a stream depends only on its purpose and coordinates and never on
/// how many numbers another stream consumed.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

std::uint64_t splitmix64(std::uint64_t x);

/// std::mt19937_64 with distributions written out explicitly. The standard
/// engine's output sequence is fixed by the standard; its distributions are
/// not, so they are not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (cosine branch only).
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the U^(1/shape) boost.
  double gamma(double shape);
  /// Uniform integer in [0, n) by rejection.
  std::size_t below(std::size_t n);
  /// Index drawn from nonnegative weights (need not be normalized).
  std::size_t categorical(std::span<const double> weights);
  /// Symmetric Dirichlet(alpha * 1_k) via normalized gammas.
  std::vector<double> dirichlet(double alpha, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fednano
