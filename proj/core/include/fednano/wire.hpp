// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fednano/aggregation.hpp"
#include "fednano/model.hpp"

namespace fednano {

// All binary formats are little-endian with fixed-width integers and IEEE-754
// binary64 values.

/// RoundUpdate on the wire:
///
///   offset size  field
///   0      4     magic "FNRU"
///   4      4     u32 version (1)
///   8      8     u64 client_id
///   16     8     u64 n_samples
///   24     8     u64 theta_len
///   32     8     u64 fisher_len (0 when no Fisher diagonal is sent)
///   40     8     u64 fisher_sample_count
///   48     ...   theta_len f64, then fisher_len f64   <- payload
struct EncodedUpdate {
  static constexpr std::size_t kHeaderBytes = 48;
  std::vector<std::uint8_t> bytes;

  std::size_t payload_bytes() const { return bytes.size() - kHeaderBytes; }
};

EncodedUpdate encode_round_update(const RoundUpdate& update);
RoundUpdate decode_round_update(std::span<const std::uint8_t> bytes);

/// Boundary tensors on the wire: magic "FNBA"/"FNBG", u32 version, u64
/// batch_id, u64 rows, u64 cols, rows*cols f64.
std::vector<std::uint8_t> encode_boundary(const BoundaryActivation& activation);
std::vector<std::uint8_t> encode_boundary(const BoundaryGradient& gradient);
BoundaryActivation decode_boundary_activation(std::span<const std::uint8_t> bytes);
BoundaryGradient decode_boundary_gradient(std::span<const std::uint8_t> bytes);

/// Resumable global state.
///
///   offset size  field
///   0      4     magic "FNCK"
///   4      4     u32 version (1)
///   8      8     u64 round (completed rounds)
///   16     8     u64 config_hash
///   24     4     u32 rank
///   28     4     u32 d_model
///   32     4     u32 flags (bit 0: image adapter, bit 1: text adapter)
///   36     4     u32 reserved (0)
///   40     8     u64 n_values
///   48     ...   n_values f64 (AdapterParams flat order)
struct Checkpoint {
  std::uint64_t round = 0;
  std::uint64_t config_hash = 0;
  AdapterLayout layout;
  std::vector<double> theta;

  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace fednano
