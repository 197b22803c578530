// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/rng.hpp"

#include <cmath>
#include <numbers>

#include "fednano/error.hpp"

namespace fednano {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
  std::uint64_t tag_hash = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    tag_hash ^= static_cast<unsigned char>(c);
    tag_hash *= 0x100000001b3ULL;
  }
  std::uint64_t h = splitmix64(parent);
  h = splitmix64(h ^ tag_hash);
  for (std::uint64_t idx : indices) h = splitmix64(h ^ idx);
  return h;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw InvalidArgument("gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw InvalidArgument("below(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("categorical weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("categorical weights sum to zero");
  const double target = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Rounding can leave target == total; fall back to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::vector<double> Rng::dirichlet(double alpha, std::size_t k) {
  if (!(alpha > 0.0)) throw InvalidArgument("Dirichlet concentration must be positive");
  std::vector<double> p(k);
  double total = 0.0;
  for (double& x : p) {
    x = gamma(alpha);
    total += x;
  }
  if (total <= 0.0) {
    // Every gamma underflowed (tiny alpha): put the mass on one uniform pick.
    std::fill(p.begin(), p.end(), 0.0);
    p[below(k)] = 1.0;
    return p;
  }
  for (double& x : p) x /= total;
  return p;
}

}  // namespace fednano
