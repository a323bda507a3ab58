#pragma once

#include <stdexcept>
#include <string>

namespace tecnet {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents do not agree (e.g. matmul inner extents).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A layer or model was configured with values it cannot realize.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An API was called in a state or with arguments it does not accept.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A metric was requested on operands where it is not defined.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// File or stream I/O failed, or file contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tecnet
