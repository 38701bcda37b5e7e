#pragma once

#include <stdexcept>
#include <string>

namespace etct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside an operation's domain (x = 0, k out of range, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite results, eigensolver failure, singular quantities.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration or inconsistent options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// External decision procedure failed to run or answered garbage.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace etct
