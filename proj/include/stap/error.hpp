#pragma once

#include <stdexcept>
#include <string>

namespace stap {

// Exit-code classes used by the CLI: usage/config -> 1, data -> 2, numeric -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Raised when a direction is requested for the zero vector.
class UndefinedDirection : public NumericError {
 public:
  UndefinedDirection() : NumericError("direction of a zero-length vector is undefined") {}
};

}  // namespace stap
