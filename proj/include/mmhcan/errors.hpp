#pragma once

#include <stdexcept>
#include <string>

namespace mmhcan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input outside an operation's mathematical domain (sqrt_recip of 0, log of a
// negative magnitude, zero-vector cosine similarity).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A forward op produced NaN/Inf from finite inputs.
class NonFiniteError : public Error {
 public:
  NonFiniteError(std::string op, const std::string& what)
      : Error(what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

// Bad user input: config, CLI, files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmhcan
