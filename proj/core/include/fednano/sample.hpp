// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fednano {

/// One (image, question, answer) triplet of the synthetic task.
struct Sample {
  std::uint64_t id = 0;
  std::vector<double> image_features;
  std::vector<std::uint32_t> question_tokens;
  std::uint32_t answer = 0;
  /// Partitioning key only; never shown to the model.
  std::uint32_t category = 0;

  bool operator==(const Sample&) const = default;
};

}  // namespace fednano
