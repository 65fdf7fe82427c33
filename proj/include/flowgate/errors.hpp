#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowgate {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid scenario/configuration. `field` names the offending setting.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Host/hardware synchronization contract broken (e.g. a zero flow id where
// a programmed flow is required).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// A run-time invariant (conservation, sync, single-offload) was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SinkWriteError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowgate
