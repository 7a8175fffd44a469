#pragma once

#include <stdexcept>
#include <string>

namespace stnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition (range, length, label bounds).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A well-formed request the library deliberately does not support
/// (even kernel extents, pooling a 1-pixel map, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration problems; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrc {
  Truncated,
  CorruptRecord,
  NotNpy,
  UnsupportedLayout,
  UnsupportedDtype,
  UnsupportedImage,
  ShapeMismatch,
  BadCheckpoint,
};

const char* to_string(ParseErrc code);

/// Raised by the binary parsers; `code()` identifies the failure class.
class ParseError : public Error {
 public:
  ParseError(ParseErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ParseErrc code() const noexcept { return code_; }

 private:
  ParseErrc code_;
};

}  // namespace stnet
