#pragma once

#include <stdexcept>
#include <string>

namespace orient {

/// Root of every error this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes that do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// API misuse: calling backward before forward, bad argument ranges.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: labels out of range, malformed manifests, undecodable files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Not enough source material to satisfy a sampling request.
class CapacityError : public DataError {
 public:
  using DataError::DataError;
};

/// NaN/Inf encountered in a numeric path.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace orient
