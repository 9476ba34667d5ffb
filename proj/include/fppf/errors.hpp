#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fppf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line and the offending field when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line = 0, std::string field = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line),
        field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// The network violates a modeling requirement (disconnected, duplicate ids,
/// zero reactance, standing assumptions on B, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterate left the region where the fixed-point maps are defined
/// (|psi_k| > 1 or a nonpositive normalized voltage).
class DomainError : public Error {
 public:
  DomainError(const std::string& msg, std::optional<std::size_t> branch = std::nullopt,
              double value = 0.0)
      : Error(msg), branch_(branch), value_(value) {}
  std::optional<std::size_t> branch() const { return branch_; }
  double value() const { return value_; }

 private:
  std::optional<std::size_t> branch_;
  double value_;
};

}  // namespace fppf
