#pragma once

#include <stdexcept>
#include <string>

namespace kdv {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or infinity appeared in a recorded computation.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::string what, long node)
      : Error(std::move(what)), node_(node) {}
  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// Invalid argument, shape mismatch or degenerate input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed run configuration (unknown key, bad value, unparsable line).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdv
