// Copyright 2026 fednano contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace fednano {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible tensor shapes, reported with the offending node and dims.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Misuse of a compute graph (unbound input, backward before forward, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument did not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated on-disk / on-wire data.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fednano
