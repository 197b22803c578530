// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fednano {

/// Dense row-major tensor of 64-bit floats.
///
/// Every op in the library works on rank-2 tensors (batch x features); the
/// class itself accepts any rank so that shapes survive serialization.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double value);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor scalar(double value) { return filled(1, 1, value); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Leading dimension. Requires rank 2.
  std::size_t rows() const;
  /// Trailing dimension. Requires rank 2.
  std::size_t cols() const;

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Value of a 1x1 tensor.
  double item() const;

  std::string shape_string() const;

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Kernels shared by the graph and by frozen (non-differentiable) code paths.
// They check only what the graph cannot check on their behalf.

/// a(m,k) * b(k,n); transposes are applied logically, without copies.
Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a = false,
              bool transpose_b = false);
/// a + b where b has the same shape as a or is a (1,n) row broadcast over rows.
Tensor add_broadcast(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& x);
Tensor concat_cols(const Tensor& a, const Tensor& b);

/// FNV-1a over the raw little-endian bytes of shape and data.
std::uint64_t checksum(const Tensor& t, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t checksum(std::span<const double> values,
                       std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace fednano
