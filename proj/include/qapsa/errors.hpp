#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qapsa {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidPairError : public Error {
 public:
  using Error::Error;
};

/// The Δ-matrix fast path only covers symmetric zero-diagonal instances.
class UnsupportedInstanceError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an ordering contract (missing snapshot, stale Δ, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad integer token in an instance file; `position` is the 0-based token index.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& token)
      : Error("token " + std::to_string(position) + " is not an integer: '" +
              token + "'"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class TruncationError : public Error {
 public:
  TruncationError(std::size_t expected, std::size_t actual)
      : Error("expected " + std::to_string(expected) + " tokens, got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace qapsa
