#pragma once

#include <stdexcept>
#include <string>

namespace reglue {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates an operation's precondition (bad arguments, degenerate data).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to converge or lost track of a branch.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid job configuration (CLI level).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace reglue
