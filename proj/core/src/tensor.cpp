// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/tensor.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "fednano/error.hpp"

namespace fednano {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void check_dims(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dims must be positive, got " + fednano::shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(element_count(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_dims(shape_);
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + fednano::shape_string(shape_));
  }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value) {
  Tensor t({rows, cols});
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("expected rank-2 tensor, got " + shape_string());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("expected rank-2 tensor, got " + shape_string());
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_string());
  return data_[0];
}

std::string Tensor::shape_string() const { return fednano::shape_string(shape_); }

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw ShapeError("matmul inner dims differ: " + a.shape_string() + (transpose_a ? "^T" : "") +
                     " x " + b.shape_string() + (transpose_b ? "^T" : ""));
  }
  Tensor out = Tensor::zeros(m, n);
  const std::size_t a_cols = a.cols();
  const std::size_t b_cols = b.cols();
  std::span<const double> av = a.values();
  std::span<const double> bv = b.values();
  std::span<double> ov = out.values();
  // i-p-j loop order keeps the innermost loop contiguous for the common case.
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = ov.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = transpose_a ? av[p * a_cols + i] : av[i * a_cols + p];
      if (!transpose_b) {
        const double* brow = bv.data() + p * b_cols;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * bv[j * b_cols + p];
      }
    }
  }
  return out;
}

Tensor add_broadcast(const Tensor& a, const Tensor& b) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  if (b.cols() != cols || (b.rows() != rows && b.rows() != 1)) {
    throw ShapeError("add: cannot broadcast " + b.shape_string() + " onto " + a.shape_string());
  }
  Tensor out = a;
  std::span<double> ov = out.values();
  std::span<const double> bv = b.values();
  const bool row_broadcast = b.rows() == 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* brow = bv.data() + (row_broadcast ? 0 : r * cols);
    for (std::size_t c = 0; c < cols; ++c) ov[r * cols + c] += brow[c];
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("concat: row counts differ: " + a.shape_string() + " vs " + b.shape_string());
  }
  const std::size_t rows = a.rows();
  const std::size_t ca = a.cols();
  const std::size_t cb = b.cols();
  Tensor out = Tensor::zeros(rows, ca + cb);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < cb; ++c) out(r, ca + c) = b(r, c);
  }
  return out;
}

std::uint64_t checksum(std::span<const double> values, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char byte : bytes) {
      h ^= byte;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::uint64_t checksum(const Tensor& t, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t d : t.shape()) {
    h ^= static_cast<std::uint64_t>(d);
    h *= 0x100000001b3ULL;
  }
  return checksum(t.values(), h);
}

}  // namespace fednano
