#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xlf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, missing fields, duplicate ids,
/// violated preconditions. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// JSON that could not be parsed. Carries the byte offset reported by the parser.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : ValidationError(what), byte_offset_(byte_offset) {}

  /// Zero-based offset of the offending byte.
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// Invalid or incomplete configuration.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A translation service failed after retries, or returned nothing usable.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Scorer plugin could not be started.
class SpawnError : public Error {
 public:
  using Error::Error;
};

/// Scorer plugin died or its pipe broke mid-request.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Scorer plugin sent something that does not follow the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace xlf
