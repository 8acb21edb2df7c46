#pragma once

#include <stdexcept>
#include <string>

namespace wdur {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An image axis has an unsupported size (e.g. odd size fed to the DWT).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Two tensors that must agree in shape do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric or structural parameter is out of its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or incompatible file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Cascade plan cannot reach the requested resolution.
class PlanError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace wdur
