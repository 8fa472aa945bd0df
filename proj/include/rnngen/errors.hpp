// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rnngen {

/// Precondition violation: bad dimensions, out-of-range labels, non-finite
/// entries, missing norms.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed model or dataset file. `field()` names the offending key (empty
/// when the failure is syntactic) and `byte_offset()` locates syntax errors.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string field,
             std::size_t byte_offset = 0)
      : std::runtime_error(what),
        field_(std::move(field)),
        byte_offset_(byte_offset) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string field_;
  std::size_t byte_offset_;
};

class UnsupportedCell : public ParseError {
 public:
  using ParseError::ParseError;
};

class VersionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

class DimensionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingField : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace rnngen
