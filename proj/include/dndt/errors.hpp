#pragma once

#include <stdexcept>
#include <string>

namespace dndt {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses to process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform for an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or argument combination (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data problems (exit code 3).
class DataError : public Error {
 public:
  enum class Kind { Io, Parse, Empty, SingleClass, Schema, Split };

  DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Diverged training or an operation fed out-of-domain values (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dndt
