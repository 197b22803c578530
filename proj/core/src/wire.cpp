// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#include "fednano/wire.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "fednano/error.hpp"

namespace fednano {

namespace {

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

class Writer {
 public:
  void magic(const char (&tag)[5]) { raw(tag, 4); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64s(std::span<const double> values) { raw(values.data(), values.size_bytes()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void expect_magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
      throw FormatError(std::string(what_) + ": bad magic, expected '" + tag + "'");
    }
    pos_ += 4;
  }
  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  std::vector<double> f64s(std::uint64_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(double)) {
      throw FormatError(std::string(what_) + ": truncated value block");
    }
    std::vector<double> v(static_cast<std::size_t>(n));
    std::memcpy(v.data(), bytes_.data() + pos_, v.size() * sizeof(double));
    pos_ += v.size() * sizeof(double);
    return v;
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(std::string(what_) + ": trailing bytes");
  }

 private:
  template <typename T>
  T scalar() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string(what_) + ": truncated header");
  }

  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kVersion = 1;

void check_version(std::uint32_t v, const char* what) {
  if (v != kVersion) {
    throw FormatError(std::string(what) + ": unsupported version " + std::to_string(v));
  }
}

std::vector<std::uint8_t> encode_tensor(const char (&tag)[5], const Tensor& t, std::uint64_t batch_id) {
  Writer w;
  w.magic(tag);
  w.u32(kVersion);
  w.u64(batch_id);
  w.u64(t.rows());
  w.u64(t.cols());
  w.f64s(t.values());
  return w.take();
}

std::pair<Tensor, std::uint64_t> decode_tensor(const char (&tag)[5], std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "boundary message");
  r.expect_magic(tag);
  check_version(r.u32(), "boundary message");
  const std::uint64_t batch_id = r.u64();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (rows == 0 || cols == 0) throw FormatError("boundary message: zero dimension");
  if (rows > bytes.size() / sizeof(double) || cols > bytes.size() / sizeof(double)) {
    throw FormatError("boundary message: implausible dims");
  }
  std::vector<double> values = r.f64s(rows * cols);
  r.expect_end();
  return {Tensor({static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)}, std::move(values)),
          batch_id};
}

}  // namespace

EncodedUpdate encode_round_update(const RoundUpdate& update) {
  update.validate();
  Writer w;
  w.magic("FNRU");
  w.u32(kVersion);
  w.u64(update.client_id);
  w.u64(update.n_samples);
  w.u64(update.theta.size());
  w.u64(update.fisher ? update.fisher->values.size() : 0);
  w.u64(update.fisher ? update.fisher->sample_count : 0);
  w.f64s(update.theta);
  if (update.fisher) w.f64s(update.fisher->values);
  return EncodedUpdate{w.take()};
}

RoundUpdate decode_round_update(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "round update");
  r.expect_magic("FNRU");
  check_version(r.u32(), "round update");
  RoundUpdate u;
  u.client_id = r.u64();
  u.n_samples = static_cast<std::size_t>(r.u64());
  const std::uint64_t theta_len = r.u64();
  const std::uint64_t fisher_len = r.u64();
  const std::uint64_t fisher_samples = r.u64();
  u.theta = r.f64s(theta_len);
  if (fisher_len > 0) {
    FisherDiagonal f;
    f.values = r.f64s(fisher_len);
    f.sample_count = static_cast<std::size_t>(fisher_samples);
    u.fisher = std::move(f);
  }
  r.expect_end();
  u.validate();
  return u;
}

std::vector<std::uint8_t> encode_boundary(const BoundaryActivation& activation) {
  return encode_tensor("FNBA", activation.values, activation.batch_id);
}

std::vector<std::uint8_t> encode_boundary(const BoundaryGradient& gradient) {
  return encode_tensor("FNBG", gradient.values, gradient.batch_id);
}

BoundaryActivation decode_boundary_activation(std::span<const std::uint8_t> bytes) {
  auto [t, id] = decode_tensor("FNBA", bytes);
  return BoundaryActivation{std::move(t), id};
}

BoundaryGradient decode_boundary_gradient(std::span<const std::uint8_t> bytes) {
  auto [t, id] = decode_tensor("FNBG", bytes);
  return BoundaryGradient{std::move(t), id};
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  if (c.theta.size() != c.layout.flat_size()) {
    throw ShapeError("checkpoint theta length does not match its adapter layout");
  }
  Writer w;
  w.magic("FNCK");
  w.u32(kVersion);
  w.u64(c.round);
  w.u64(c.config_hash);
  w.u32(static_cast<std::uint32_t>(c.layout.rank));
  w.u32(static_cast<std::uint32_t>(c.layout.d_model));
  w.u32((c.layout.image_enabled ? 1u : 0u) | (c.layout.text_enabled ? 2u : 0u));
  w.u32(0);
  w.u64(c.theta.size());
  w.f64s(c.theta);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "checkpoint");
  r.expect_magic("FNCK");
  check_version(r.u32(), "checkpoint");
  Checkpoint c;
  c.round = r.u64();
  c.config_hash = r.u64();
  c.layout.rank = r.u32();
  c.layout.d_model = r.u32();
  const std::uint32_t flags = r.u32();
  if (flags & ~3u) throw FormatError("checkpoint: unknown flag bits");
  c.layout.image_enabled = (flags & 1u) != 0;
  c.layout.text_enabled = (flags & 2u) != 0;
  r.u32();
  const std::uint64_t n = r.u64();
  c.theta = r.f64s(n);
  r.expect_end();
  c.layout.validate();
  if (c.theta.size() != c.layout.flat_size()) {
    throw FormatError("checkpoint: value count does not match adapter layout");
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(checkpoint);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing checkpoint: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace fednano
