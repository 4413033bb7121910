#pragma once

#include <stdexcept>
#include <string>

namespace ldrift {

// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or width mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Graph structure violated (empty softmax segment, bad node id, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Input data unusable: unreadable file, ragged rows, nothing survives cleaning.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or contract violation on parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ldrift
