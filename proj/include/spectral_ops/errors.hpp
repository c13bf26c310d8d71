#pragma once

#include <stdexcept>
#include <string>

namespace spectral_ops {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents are invalid or inconsistent with each other.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A tensor file could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A model, kernel or parameter set is not usable as configured.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spectral_ops
