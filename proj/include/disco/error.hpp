#pragma once

#include <stdexcept>
#include <string>

namespace disco {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (block lists, vector lengths, matrix sizes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented precondition (ranges, physical parameters,
/// radius conditions, config fields). `field` holds a dotted path when known.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string field = {})
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A rollout produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace disco
